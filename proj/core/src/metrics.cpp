#include "dssc/metrics.hpp"

#include <cmath>
#include <limits>

namespace dssc::metrics {

std::vector<Index> hungarian(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw ValidationError("hungarian: cost not square");
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials formulation; p[j] = row matched to column j
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<Index> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const Index i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<Index> row_to_col(static_cast<size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

namespace {

Eigen::MatrixXd contingency(const spectral::ClusterLabels& pred,
                            const spectral::ClusterLabels& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("metrics: label length mismatch (" + std::to_string(pred.size()) +
                          " vs " + std::to_string(truth.size()) + ")");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(pred.k, truth.k);
  for (Index i = 0; i < pred.size(); ++i)
    table(pred.ids[static_cast<size_t>(i)], truth.ids[static_cast<size_t>(i)]) += 1.0;
  return table;
}

}  // namespace

double accuracy(const spectral::ClusterLabels& pred, const spectral::ClusterLabels& truth) {
  const Eigen::MatrixXd table = contingency(pred, truth);
  const Index k = std::max(table.rows(), table.cols());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(k, k);
  cost.topLeftCorner(table.rows(), table.cols()) = -table;
  const std::vector<Index> match = hungarian(cost);
  double correct = 0.0;
  for (Index r = 0; r < table.rows(); ++r) {
    const Index c = match[static_cast<size_t>(r)];
    if (c < table.cols()) correct += table(r, c);
  }
  return correct / static_cast<double>(pred.size());
}

double nmi(const spectral::ClusterLabels& pred, const spectral::ClusterLabels& truth) {
  const Eigen::MatrixXd table = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  const Eigen::VectorXd pr = table.rowwise().sum() / n;
  const Eigen::VectorXd pc = table.colwise().sum().transpose() / n;
  double info = 0.0;
  for (Index a = 0; a < table.rows(); ++a)
    for (Index b = 0; b < table.cols(); ++b) {
      const double pab = table(a, b) / n;
      if (pab > 0.0) info += pab * std::log(pab / (pr[a] * pc[b]));
    }
  auto entropy = [](const Eigen::VectorXd& p) {
    double h = 0.0;
    for (Index i = 0; i < p.size(); ++i)
      if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
  };
  const double denom = 0.5 * (entropy(pr) + entropy(pc));
  if (denom == 0.0) return 1.0;  // both partitions are a single cluster
  return info / denom;
}

double spe(const SparseRows& a, const spectral::ClusterLabels& truth,
           Index* zero_column_warnings) {
  if (!a.is_square()) throw ValidationError("spe: affinity not square");
  if (a.rows() != truth.size()) throw ValidationError("spe: label length mismatch");
  const SparseRows cols = a.transposed();
  double total = 0.0;
  Index zero_cols = 0;
  for (Index i = 0; i < cols.rows(); ++i) {
    double l1 = 0.0, off = 0.0;
    const int yi = truth.ids[static_cast<size_t>(i)];
    for (const auto& e : cols.row(i)) {
      const double v = std::abs(e.value);
      l1 += v;
      if (truth.ids[static_cast<size_t>(e.col)] != yi) off += v;
    }
    if (l1 > 0.0)
      total += off / l1;
    else
      ++zero_cols;
  }
  if (zero_column_warnings) *zero_column_warnings = zero_cols;
  return total / static_cast<double>(cols.rows());
}

double nnz_per_col(const SparseRows& a, double threshold) {
  return static_cast<double>(a.count_above(threshold)) / static_cast<double>(a.cols());
}

}  // namespace dssc::metrics
