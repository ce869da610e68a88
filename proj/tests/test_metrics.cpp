#include <doctest.h>

#include <numeric>
#include <random>

#include "dssc/metrics.hpp"
#include "oracles.hpp"

using namespace dssc;
using namespace dssc::metrics;
using dssc::spectral::ClusterLabels;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("accuracy is 1 for identical and relabeled partitions") {
  const ClusterLabels a({0, 0, 1, 1, 2, 2}, 3);
  CHECK(accuracy(a, a) == 1.0);
  const ClusterLabels renamed({1, 1, 2, 2, 0, 0}, 3);  // cyclic rename
  CHECK(accuracy(renamed, a) == 1.0);
  CHECK(accuracy(a, renamed) == 1.0);
}

TEST_CASE("accuracy on the worked 4-point example") {
  const ClusterLabels pred({0, 0, 1, 1}, 2);
  const ClusterLabels truth({0, 1, 1, 1}, 2);
  CHECK(accuracy(pred, truth) == doctest::Approx(0.75));
  CHECK(oracles::brute_force_accuracy(pred, truth) == doctest::Approx(0.75));
}

TEST_CASE("accuracy equals brute force on random small partitions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 12;
    std::vector<int> p(static_cast<size_t>(n)), t(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
      p[static_cast<size_t>(i)] = static_cast<int>(rng() % 4);
      t[static_cast<size_t>(i)] = static_cast<int>(rng() % 4);
    }
    const ClusterLabels pred(p, 4), truth(t, 4);
    CHECK(accuracy(pred, truth) ==
          doctest::Approx(oracles::brute_force_accuracy(pred, truth)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian solves small assignments optimally") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Index k = 5;
    const Eigen::MatrixXd cost = oracles::random_matrix(k, k, 100 + trial, 0.0, 1.0);
    const std::vector<Index> got = hungarian(cost);
    double got_cost = 0.0;
    for (Index i = 0; i < k; ++i) got_cost += cost(i, got[static_cast<size_t>(i)]);
    // brute force over all 5! assignments
    std::vector<Index> perm(static_cast<size_t>(k));
    std::iota(perm.begin(), perm.end(), Index(0));
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (Index i = 0; i < k; ++i) c += cost(i, perm[static_cast<size_t>(i)]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got_cost == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("nmi basics") {
  const ClusterLabels a({0, 0, 1, 1}, 2);
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  const ClusterLabels b({0, 1, 0, 1}, 2);
  CHECK(nmi(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  const ClusterLabels single({0, 0, 0, 0}, 1);
  CHECK(nmi(single, single) == 1.0);
}

TEST_CASE("nmi matches the independent oracle") {
  const std::vector<int> p = {0, 0, 1, 1};
  const std::vector<int> t = {0, 1, 1, 1};
  CHECK(nmi(ClusterLabels(p, 2), ClusterLabels(t, 2)) ==
        doctest::Approx(oracles::nmi_oracle(p, t)).epsilon(1e-12));
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> a(40), b(40);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<int>(rng() % 5);
      b[i] = static_cast<int>(rng() % 3);
    }
    CHECK(nmi(ClusterLabels(a, 5), ClusterLabels(b, 3)) ==
          doctest::Approx(oracles::nmi_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("nmi and accuracy are invariant under relabeling") {
  const ClusterLabels pred({0, 1, 2, 0, 1, 2, 1, 1}, 3);
  const ClusterLabels truth({1, 1, 0, 0, 2, 2, 2, 1}, 3);
  const ClusterLabels pred_renamed({2, 0, 1, 2, 0, 1, 0, 0}, 3);
  CHECK(accuracy(pred, truth) == doctest::Approx(accuracy(pred_renamed, truth)));
  CHECK(nmi(pred, truth) == doctest::Approx(nmi(pred_renamed, truth)));
}

TEST_CASE("spe is zero for aligned block-diagonal affinities") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  a.topLeftCorner(3, 3).setConstant(1.0 / 3);
  a.bottomRightCorner(3, 3).setConstant(1.0 / 3);
  const ClusterLabels truth({0, 0, 0, 1, 1, 1}, 2);
  CHECK(spe(SparseRows::from_dense(a), truth) == 0.0);
}

TEST_CASE("spe of the uniform affinity with equal clusters") {
  const Index k = 4, per = 5, n = k * per;
  const SparseRows a = SparseRows::from_dense(Eigen::MatrixXd::Constant(n, n, 1.0 / n));
  std::vector<int> t(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) t[static_cast<size_t>(i)] = static_cast<int>(i / per);
  CHECK(spe(a, ClusterLabels(t, k)) ==
        doctest::Approx(static_cast<double>(k - 1) / k).epsilon(1e-12));
}

TEST_CASE("spe on sparse input equals the dense column summation") {
  const Index n = 15;
  const Eigen::MatrixXd dense = oracles::random_matrix(n, n, 201, 0.0, 1.0);
  const SparseRows sparse = SparseRows::from_dense(dense, 0.55);
  std::vector<int> t(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) t[static_cast<size_t>(i)] = static_cast<int>(i % 3);
  const ClusterLabels truth(t, 3);

  const Eigen::MatrixXd pruned = sparse.to_dense();
  double expect = 0.0;
  for (Index i = 0; i < n; ++i) {
    double l1 = 0.0, off = 0.0;
    for (Index j = 0; j < n; ++j) {
      l1 += std::abs(pruned(j, i));
      if (t[static_cast<size_t>(j)] != t[static_cast<size_t>(i)]) off += std::abs(pruned(j, i));
    }
    if (l1 > 0) expect += off / l1;
  }
  expect /= static_cast<double>(n);
  CHECK(spe(sparse, truth) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("spe counts zero columns without failing") {
  SparseRows a(3, 3);
  a.insert(0, 0, 1.0);
  a.insert(1, 0, 0.5);  // column 1 and 2 empty
  Index warnings = 0;
  const double v = spe(a, ClusterLabels({0, 0, 1}, 2), &warnings);
  CHECK(warnings == 2);
  CHECK(v >= 0.0);
}

TEST_CASE("nnz per column") {
  CHECK(nnz_per_col(SparseRows::identity(7)) == doctest::Approx(1.0));
  const Index n = 9;
  CHECK(nnz_per_col(SparseRows::from_dense(Eigen::MatrixXd::Ones(n, n))) ==
        doctest::Approx(static_cast<double>(n)));
  SparseRows a(2, 2);
  a.insert(0, 0, 1e-15);  // below threshold
  a.insert(0, 1, 0.5);
  CHECK(nnz_per_col(a) == doctest::Approx(0.5));
}

TEST_CASE("metrics reject mismatched lengths") {
  CHECK_THROWS_AS(accuracy(ClusterLabels({0, 1}, 2), ClusterLabels({0, 1, 0}, 2)),
                  ValidationError);
  CHECK_THROWS_AS(nmi(ClusterLabels({0, 1}, 2), ClusterLabels({0, 1, 0}, 2)), ValidationError);
}

TEST_SUITE_END();
