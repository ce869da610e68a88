#include "dssc/jdssc.hpp"

#include <cmath>

#include "dssc/selfexpr.hpp"

namespace dssc::jdssc {

namespace {

constexpr double kDivergenceGuard = 1e12;

// clip negatives and zero the diagonal in place
void prox_nonneg_zero_diag(Eigen::MatrixXd& m) {
  m = m.cwiseMax(0.0);
  m.diagonal().setZero();
}

void check_finite(const AdmmState& s) {
  auto bad = [](const Eigen::MatrixXd& m) {
    return !m.allFinite() || m.cwiseAbs().maxCoeff() > kDivergenceGuard;
  };
  if (bad(s.cp) || bad(s.cq) || bad(s.a) || bad(s.y) || bad(s.z) || bad(s.big_lambda1) ||
      bad(s.big_lambda2) || !s.lambda1.allFinite() || !s.lambda2.allFinite())
    throw ConvergenceError("admm_step: iterate diverged past " +
                           std::to_string(kDivergenceGuard) + " at iteration " +
                           std::to_string(s.iter));
}

// apply P = I - 11'/(2n+1) to a vector
Eigen::VectorXd apply_p(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  return v.array() - v.sum() / (2.0 * n + 1.0);
}

}  // namespace

AdmmState AdmmState::initial(Index d, Index n) {
  AdmmState s;
  s.cp = Eigen::MatrixXd::Zero(n, n);
  s.cq = Eigen::MatrixXd::Zero(n, n);
  s.a = Eigen::MatrixXd::Identity(n, n);
  s.y = Eigen::MatrixXd::Identity(n, n);
  s.z = Eigen::MatrixXd::Zero(d, n);
  s.lambda1 = Eigen::VectorXd::Zero(n);
  s.lambda2 = Eigen::VectorXd::Zero(n);
  s.big_lambda1 = Eigen::MatrixXd::Zero(n, n);
  s.big_lambda2 = Eigen::MatrixXd::Zero(d, n);
  s.xc = Eigen::MatrixXd::Zero(d, n);
  return s;
}

void admm_step(AdmmState& s, const DataMatrix& x, const DsscParams& p, bool freeze_affinity) {
  const Eigen::MatrixXd& v = x.values();
  const Index n = v.cols();
  const double rho = p.rho;
  const double tau = p.tau;
  const double prox_scale = 1.0 / (p.eta1 + 1.0 / tau);

  // linearized proximal step on cp
  s.xc.noalias() = v * (s.cp - s.cq);
  Eigen::MatrixXd grad = v.transpose() * (rho * (s.xc - s.z) - s.big_lambda2);
  Eigen::MatrixXd cp_half = s.cp - tau * grad;
  s.cp = prox_scale * ((1.0 / tau) * cp_half - p.eta1 * s.cq + (p.eta1 * p.eta2) * s.a -
                       Eigen::MatrixXd::Constant(n, n, p.eta3));
  prox_nonneg_zero_diag(s.cp);

  // cq sees the fresh cp
  s.xc.noalias() = v * (s.cp - s.cq);
  grad = v.transpose() * (s.big_lambda2 - rho * (s.xc - s.z));
  Eigen::MatrixXd cq_half = s.cq - tau * grad;
  s.cq = prox_scale * ((1.0 / tau) * cq_half - p.eta1 * s.cp + (p.eta1 * p.eta2) * s.a -
                       Eigen::MatrixXd::Constant(n, n, p.eta3));
  prox_nonneg_zero_diag(s.cq);

  if (!freeze_affinity) {
    // exact minimization for a
    s.a = ((p.eta1 * p.eta2) * (s.cp + s.cq) + s.big_lambda1 + rho * s.y) /
          (p.eta1 * p.eta2 * p.eta2 + rho);
    s.a = s.a.cwiseMax(0.0);

    // exact minimization for y: solve rho*Y + rho*Y*11' + rho*11'*Y = V
    Eigen::MatrixXd vmat = rho * s.a + 2.0 * rho * Eigen::MatrixXd::Ones(n, n) -
                           Eigen::VectorXd::Ones(n) * s.lambda1.transpose() -
                           s.lambda2 * Eigen::RowVectorXd::Ones(n) - s.big_lambda1;
    const double scale = 1.0 / (static_cast<double>(n) + 1.0);
    const Eigen::VectorXd pv_rows = apply_p(vmat.rowwise().sum()) * scale;
    const Eigen::VectorXd pv_cols = apply_p(vmat.colwise().sum().transpose()) * scale;
    s.y = (vmat - pv_rows * Eigen::RowVectorXd::Ones(n) -
           Eigen::VectorXd::Ones(n) * pv_cols.transpose()) /
          rho;
  }

  // exact minimization for z
  s.xc.noalias() = v * (s.cp - s.cq);
  s.z = (v - s.big_lambda2 + rho * s.xc) / (1.0 + rho);

  // dual ascent
  const Eigen::VectorXd col_res = s.y.colwise().sum().transpose() - Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd row_res = s.y.rowwise().sum() - Eigen::VectorXd::Ones(n);
  if (!freeze_affinity) {
    s.lambda1 += rho * col_res;
    s.lambda2 += rho * row_res;
    s.big_lambda1 += rho * (s.y - s.a);
  }
  s.big_lambda2 += rho * (s.z - s.xc);

  s.res_ya = (s.y - s.a).norm();
  s.res_z = (s.z - s.xc).norm();
  s.res_rows = row_res.norm();
  s.res_cols = col_res.norm();
  ++s.iter;
  check_finite(s);
}

double model_objective(const Eigen::MatrixXd& cp, const Eigen::MatrixXd& cq,
                       const Eigen::MatrixXd& a, const DataMatrix& x,
                       const DsscParams& params) {
  if (cp.rows() != cp.cols() || cq.rows() != cq.cols() || a.rows() != a.cols() ||
      cp.rows() != cq.rows() || cp.rows() != a.rows() || x.num_points() != cp.rows())
    throw ValidationError("model_objective: shape mismatch");
  const Eigen::MatrixXd& v = x.values();
  const double fit = 0.5 * (v - v * (cp - cq)).squaredNorm();
  const double couple = 0.5 * params.eta1 * ((cp + cq) - params.eta2 * a).squaredNorm();
  const double l1 = params.eta3 * (cp + cq).sum();
  return fit + couple + l1;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_signed(const Eigen::MatrixXd& c) {
  return {c.cwiseMax(0.0), (-c).cwiseMax(0.0)};
}

JdsscResult jdssc_solve(const DataMatrix& x, const DsscParams& params, const StopRule& stop,
                        const TraceFn& trace) {
  const Index n = x.num_points();
  params.validate(n);

  DsscParams p = params;
  std::vector<std::string> warnings;

  const double lam_max = selfexpr::gram_spectral_norm(x);
  const double tau_cap = 1.0 / (p.rho * lam_max);
  if (p.tau > tau_cap) {
    p.tau = 0.95 * tau_cap;
    warnings.push_back("tau " + std::to_string(params.tau) +
                       " violates the linearization bound 1/(rho*lambda_max) = " +
                       std::to_string(tau_cap) + "; shrunk to " + std::to_string(p.tau));
  }

  const double tol = stop.tol > 0.0 ? stop.tol : 1e-5 * std::sqrt(static_cast<double>(n));
  AdmmState state = AdmmState::initial(x.dim(), n);

  bool converged = false;
  AffinityReport report;
  while (state.iter < stop.max_iter) {
    admm_step(state, x, p);
    if (trace) {
      TracePoint pt;
      pt.iter = state.iter;
      pt.objective = model_objective(state.cp, state.cq, state.a, x, p);
      pt.residuals = {state.res_ya, state.res_z, state.res_rows, state.res_cols};
      trace(pt);
    }
    if (state.res_ya <= tol && state.res_z <= tol && state.res_rows <= tol &&
        state.res_cols <= tol) {
      report = validate_affinity(SparseRows::from_dense(state.a), stop.feasibility_tol);
      if (report.pass) {
        converged = true;
        break;
      }
    }
  }

  if (!converged) {
    report = validate_affinity(SparseRows::from_dense(state.a), stop.feasibility_tol);
    warnings.push_back(
        "not converged after " + std::to_string(state.iter) + " iterations; residuals (" +
        std::to_string(state.res_ya) + ", " + std::to_string(state.res_z) + ", " +
        std::to_string(state.res_rows) + ", " + std::to_string(state.res_cols) + ")");
  }

  JdsscResult result{state.cp,
                     state.cq,
                     CoeffMatrix::from_dense(state.cp - state.cq, /*zero_diag=*/true),
                     state.a,
                     std::nullopt,
                     report,
                     converged,
                     state.iter,
                     model_objective(state.cp, state.cq, state.a, x, p),
                     {state.res_ya, state.res_z, state.res_rows, state.res_cols},
                     std::move(warnings)};
  if (report.pass)
    result.affinity.emplace(SparseRows::from_dense(state.a), stop.feasibility_tol);
  return result;
}

}  // namespace dssc::jdssc
