#include <doctest.h>

#include <random>

#include "dssc/jdssc.hpp"
#include "dssc/selfexpr.hpp"
#include "oracles.hpp"

using namespace dssc;
using namespace dssc::jdssc;

TEST_SUITE_BEGIN("jdssc");

namespace {

DataMatrix random_unit_data(Index d, Index n, std::uint64_t seed) {
  return unit_normalize_columns(DataMatrix(oracles::random_gaussian(d, n, seed)));
}

DsscParams small_params(double eta1, double eta2, double eta3) {
  DsscParams p;
  p.eta1 = eta1;
  p.eta2 = eta2;
  p.eta3 = eta3;
  p.k = 2;
  p.rho = 0.5;
  p.tau = 1e-4;
  return p;
}

// tau near the instance's linearization bound makes small tests fast
DsscParams fast_params(double eta1, double eta2, double eta3, const DataMatrix& x) {
  DsscParams p = small_params(eta1, eta2, eta3);
  p.tau = 0.9 / (p.rho * selfexpr::gram_spectral_norm(x));
  return p;
}

}  // namespace

TEST_CASE("model objective at the trivial point") {
  const DataMatrix x = random_unit_data(4, 7, 1);
  DsscParams p = small_params(2.0, 0.3, 0.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(7, 7);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(7, 7);
  const double got = model_objective(zero, zero, eye, x, p);
  const double expect = 0.5 * x.values().squaredNorm() + 0.5 * p.eta1 * p.eta2 * p.eta2 * 7.0;
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("model objective equals its expanded form") {
  const Index n = 6;
  const DataMatrix x = random_unit_data(4, n, 2);
  DsscParams p = small_params(1.3, 0.2, 0.07);
  Eigen::MatrixXd cp = oracles::random_matrix(n, n, 3, 0.0, 0.5);
  Eigen::MatrixXd cq = oracles::random_matrix(n, n, 4, 0.0, 0.5);
  cp.diagonal().setZero();
  cq.diagonal().setZero();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd c = cp - cq;
  const Eigen::MatrixXd s = cp + cq;
  const double expanded = 0.5 * (x.values() - x.values() * c).squaredNorm() +
                          0.5 * p.eta1 * s.squaredNorm() + p.eta3 * s.sum() -
                          p.eta1 * p.eta2 * (s.array() * a.array()).sum() +
                          0.5 * p.eta1 * p.eta2 * p.eta2 * a.squaredNorm();
  CHECK(model_objective(cp, cq, a, x, p) == doctest::Approx(expanded).epsilon(1e-10));
}

TEST_CASE("one admm_step reproduces the update equations") {
  const Index n = 5, d = 3;
  const DataMatrix x = random_unit_data(d, n, 7);
  DsscParams p = small_params(0.8, 0.3, 0.05);
  p.tau = 0.05;

  AdmmState s = AdmmState::initial(d, n);
  // start from a generic state so every term participates
  s.cp = oracles::random_matrix(n, n, 11, 0.0, 0.3);
  s.cq = oracles::random_matrix(n, n, 12, 0.0, 0.3);
  s.cp.diagonal().setZero();
  s.cq.diagonal().setZero();
  s.a = oracles::random_matrix(n, n, 13, 0.0, 0.5);
  s.y = oracles::random_matrix(n, n, 14, 0.0, 0.5);
  s.z = oracles::random_matrix(d, n, 15, -0.5, 0.5);
  s.lambda1 = oracles::random_matrix(n, 1, 16, -0.2, 0.2).col(0);
  s.lambda2 = oracles::random_matrix(n, 1, 17, -0.2, 0.2).col(0);
  s.big_lambda1 = oracles::random_matrix(n, n, 18, -0.2, 0.2);
  s.big_lambda2 = oracles::random_matrix(d, n, 19, -0.2, 0.2);
  const AdmmState before = s;

  admm_step(s, x, p);

  const Eigen::MatrixXd& xv = x.values();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n);
  auto prox = [&](Eigen::MatrixXd m) {
    m = m.cwiseMax(0.0);
    m.diagonal().setZero();
    return m;
  };
  const double scale = 1.0 / (p.eta1 + 1.0 / p.tau);

  // cp then cq with the freshest values
  Eigen::MatrixXd xc = xv * (before.cp - before.cq);
  Eigen::MatrixXd cp_half =
      before.cp -
      p.tau * (-xv.transpose() * before.big_lambda2 + p.rho * xv.transpose() * (xc - before.z));
  const Eigen::MatrixXd cp_new = prox(
      scale * (cp_half / p.tau - p.eta1 * before.cq + p.eta1 * p.eta2 * before.a - p.eta3 * ones));
  CHECK((s.cp - cp_new).cwiseAbs().maxCoeff() < 1e-12);

  xc = xv * (cp_new - before.cq);
  Eigen::MatrixXd cq_half =
      before.cq -
      p.tau * (xv.transpose() * before.big_lambda2 - p.rho * xv.transpose() * (xc - before.z));
  const Eigen::MatrixXd cq_new = prox(
      scale * (cq_half / p.tau - p.eta1 * cp_new + p.eta1 * p.eta2 * before.a - p.eta3 * ones));
  CHECK((s.cq - cq_new).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd a_new =
      ((p.eta1 * p.eta2 * (cp_new + cq_new) + before.big_lambda1 + p.rho * before.y) /
       (p.eta1 * p.eta2 * p.eta2 + p.rho))
          .cwiseMax(0.0);
  CHECK((s.a - a_new).cwiseAbs().maxCoeff() < 1e-12);

  // y stationarity: rho*Y + rho*Y*11' + rho*11'*Y = V
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd v = p.rho * a_new + 2.0 * p.rho * ones -
                            one * before.lambda1.transpose() -
                            before.lambda2 * one.transpose() - before.big_lambda1;
  const Eigen::MatrixXd lhs = p.rho * s.y + p.rho * s.y * ones + p.rho * ones * s.y;
  CHECK((lhs - v).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXd z_new =
      (xv - before.big_lambda2 + p.rho * xv * (cp_new - cq_new)) / (1.0 + p.rho);
  CHECK((s.z - z_new).cwiseAbs().maxCoeff() < 1e-12);

  // dual ascent
  CHECK((s.lambda1 - (before.lambda1 + p.rho * (s.y.transpose() * one - one)))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((s.lambda2 - (before.lambda2 + p.rho * (s.y * one - one))).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((s.big_lambda1 - (before.big_lambda1 + p.rho * (s.y - a_new))).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((s.big_lambda2 - (before.big_lambda2 + p.rho * (z_new - xv * (cp_new - cq_new))))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("zero data drives the affinity to uniform") {
  const Index n = 6, d = 3;
  DataMatrix x(Eigen::MatrixXd::Zero(d, n));
  DsscParams p = small_params(1.0, 0.5, 0.1);
  p.tau = 0.5;  // lambda_max = 0, any tau satisfies the bound
  StopRule stop;
  stop.tol = 1e-11;
  stop.max_iter = 30000;
  const JdsscResult res = jdssc_solve(x, p, stop);
  REQUIRE(res.converged);
  CHECK(res.cp.cwiseAbs().maxCoeff() < 1e-7);
  CHECK(res.cq.cwiseAbs().maxCoeff() < 1e-7);
  CHECK((res.a_raw.array() - 1.0 / n).abs().maxCoeff() < 1e-3);
}

TEST_CASE("full solve satisfies the model KKT conditions") {
  const Index n = 20, d = 5;
  const DataMatrix x = random_unit_data(d, n, 23);
  DsscParams p = fast_params(1.0, 0.1, 0.05, x);
  StopRule stop;
  stop.tol = 1e-8;
  stop.max_iter = 60000;
  const JdsscResult res = jdssc_solve(x, p, stop);
  REQUIRE(res.converged);
  const double kkt = oracles::joint_model_kkt_residual(res.cp, res.cq, res.a_raw, x.values(), p);
  CHECK(kkt < 1e-6);
}

TEST_CASE("disjoint supports when eta1*eta2 <= eta3") {
  for (std::uint64_t seed : {31u, 32u, 33u, 34u}) {
    const Index n = 10, d = 4;
    const DataMatrix x = random_unit_data(d, n, seed);
    DsscParams p = fast_params(1.0, 0.08, 0.1, x);  // eta1*eta2 = 0.08 <= 0.1
    StopRule stop;
    stop.tol = 1e-8;
    stop.max_iter = 60000;
    const JdsscResult res = jdssc_solve(x, p, stop);
    REQUIRE(res.converged);
    Index overlap = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (res.cp(i, j) > 1e-6 && res.cq(i, j) > 1e-6) ++overlap;
    CHECK(overlap == 0);
  }
}

TEST_CASE("overlap entries are bounded when eta1*eta2 > eta3") {
  for (std::uint64_t seed : {41u, 42u}) {
    const Index n = 10, d = 4;
    const DataMatrix x = random_unit_data(d, n, seed);
    DsscParams p = fast_params(1.0, 0.3, 0.05, x);
    const double bound = (p.eta1 * p.eta2 - p.eta3) / p.eta1;
    StopRule stop;
    stop.tol = 1e-8;
    stop.max_iter = 60000;
    const JdsscResult res = jdssc_solve(x, p, stop);
    REQUIRE(res.converged);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (res.cp(i, j) > 1e-6 && res.cq(i, j) > 1e-6)
          CHECK(std::max(res.cp(i, j), res.cq(i, j)) < bound + 1e-8);
  }
}

TEST_CASE("two initializations reach the same objective") {
  const Index n = 8, d = 4;
  const DataMatrix x = random_unit_data(d, n, 51);
  DsscParams p = fast_params(1.0, 0.15, 0.02, x);

  StopRule stop;
  stop.tol = 1e-9;
  stop.max_iter = 80000;
  const JdsscResult cold = jdssc_solve(x, p, stop);
  REQUIRE(cold.converged);

  // drive admm_step by hand from a very different starting point
  AdmmState s = AdmmState::initial(d, n);
  s.a = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  s.y = s.a;
  s.cp = oracles::random_matrix(n, n, 52, 0.0, 0.2);
  s.cp.diagonal().setZero();
  for (long it = 0; it < stop.max_iter; ++it) {
    admm_step(s, x, p);
    if (s.res_ya <= stop.tol && s.res_z <= stop.tol && s.res_rows <= stop.tol &&
        s.res_cols <= stop.tol)
      break;
  }
  const double warm_obj = model_objective(s.cp, s.cq, s.a, x, p);
  CHECK(warm_obj == doctest::Approx(cold.objective).epsilon(1e-6));
}

TEST_CASE("frozen affinity reduces to the elastic-net solution") {
  const Index n = 12, d = 5;
  const DataMatrix x = random_unit_data(d, n, 61);
  DsscParams p = fast_params(1.0, 0.2, 0.08, x);

  AdmmState s = AdmmState::initial(d, n);
  for (long it = 0; it < 200000; ++it) {
    const Eigen::MatrixXd cp_prev = s.cp;
    const Eigen::MatrixXd cq_prev = s.cq;
    admm_step(s, x, p, /*freeze_affinity=*/true);
    const double change = std::max((s.cp - cp_prev).cwiseAbs().maxCoeff(),
                                   (s.cq - cq_prev).cwiseAbs().maxCoeff());
    if (change < 1e-12 && s.res_z < 1e-10 && it > 10) break;
  }
  const Eigen::MatrixXd c_admm = s.cp - s.cq;
  const Eigen::MatrixXd c_ensc = selfexpr::ensc_solve(x, p.eta1, p.eta3).to_dense();
  CHECK((c_admm - c_ensc).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("divergence guard aborts with diagnostics") {
  const Index n = 5, d = 3;
  const DataMatrix x = random_unit_data(d, n, 71);
  DsscParams p = small_params(1.0, 0.1, 0.0);
  p.tau = 0.05;
  AdmmState s = AdmmState::initial(d, n);
  s.big_lambda2 = Eigen::MatrixXd::Constant(d, n, 1e13);
  CHECK_THROWS_AS(admm_step(s, x, p), ConvergenceError);
}

TEST_CASE("tau above the linearization bound is shrunk with a warning") {
  const Index n = 8, d = 4;
  const DataMatrix x = random_unit_data(d, n, 81);
  DsscParams p = small_params(1.0, 0.1, 0.0);
  p.tau = 1e6;
  StopRule stop;
  stop.tol = 1e-6;
  stop.max_iter = 40000;
  const JdsscResult res = jdssc_solve(x, p, stop);
  REQUIRE(!res.warnings.empty());
  CHECK(res.warnings.front().find("linearization bound") != std::string::npos);
}

TEST_SUITE_END();
