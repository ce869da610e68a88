#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace oracles {

namespace {

// Multipliers fitted on a disconnected support are only defined up to a
// shift per connected component of the bipartite support graph. Off-support
// inequality slacks can always be improved by re-shifting components, so
// feasibility is a system of difference constraints t_v - t_u <= min_slack
// (u, v ranging over components). Returns the violation left by the best
// shifts: zero exactly when valid multipliers exist.
double shift_feasibility_violation(Eigen::MatrixXd min_slack) {
  const Index c = min_slack.rows();
  double viol = 0.0;
  for (Index u = 0; u < c; ++u) {
    if (std::isfinite(min_slack(u, u))) viol = std::max(viol, -min_slack(u, u));
    min_slack(u, u) = std::min(0.0, min_slack(u, u));
  }
  for (Index k = 0; k < c; ++k)
    for (Index i = 0; i < c; ++i)
      for (Index j = 0; j < c; ++j)
        if (std::isfinite(min_slack(i, k)) && std::isfinite(min_slack(k, j)))
          min_slack(i, j) = std::min(min_slack(i, j), min_slack(i, k) + min_slack(k, j));
  for (Index u = 0; u < c; ++u) viol = std::max(viol, -min_slack(u, u));
  return std::max(0.0, viol);
}

// Connected components of the bipartite graph {rows} x {cols} linked by the
// support; fills per-row and per-column component ids, returns the count.
Index support_components(const std::vector<std::vector<Index>>& rows, Index n,
                         std::vector<Index>& row_comp, std::vector<Index>& col_comp) {
  std::vector<Index> parent(static_cast<size_t>(2 * n));
  std::iota(parent.begin(), parent.end(), Index(0));
  std::function<Index(Index)> find = [&](Index v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  for (Index i = 0; i < n; ++i)
    for (Index j : rows[static_cast<size_t>(i)]) {
      const Index a = find(i), b = find(n + j);
      if (a != b) parent[static_cast<size_t>(a)] = b;
    }
  std::map<Index, Index> remap;
  row_comp.assign(static_cast<size_t>(n), -1);
  col_comp.assign(static_cast<size_t>(n), -1);
  for (Index i = 0; i < 2 * n; ++i) {
    const Index root = find(i);
    auto [it, inserted] = remap.emplace(root, static_cast<Index>(remap.size()));
    (i < n ? row_comp[static_cast<size_t>(i)] : col_comp[static_cast<size_t>(i - n)]) =
        it->second;
  }
  return static_cast<Index>(remap.size());
}

Eigen::MatrixXd project_affine(const Eigen::MatrixXd& m) {
  const Index n = m.rows();
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(n) - m.rowwise().sum();
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(n) - m.colwise().sum().transpose();
  const double s = r.sum() / static_cast<double>(n);
  const Eigen::VectorXd u =
      r / static_cast<double>(n) - Eigen::VectorXd::Constant(n, s / (2.0 * n));
  const Eigen::VectorXd v =
      c / static_cast<double>(n) - Eigen::VectorXd::Constant(n, s / (2.0 * n));
  return m + u * Eigen::RowVectorXd::Ones(n) + Eigen::VectorXd::Ones(n) * v.transpose();
}

}  // namespace

Eigen::MatrixXd dykstra_project(const Eigen::MatrixXd& b, long max_iter, double change_tol) {
  Eigen::MatrixXd x = b;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(b.rows(), b.cols());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(b.rows(), b.cols());
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd y = project_affine(x + p);
    p = x + p - y;
    const Eigen::MatrixXd x_next = (y + q).cwiseMax(0.0);
    q = y + q - x_next;
    const double change = (x_next - x).cwiseAbs().maxCoeff();
    x = x_next;
    if (change < change_tol && it > 2) break;
  }
  return x;
}

std::optional<Eigen::MatrixXd> kkt_polish(const Eigen::MatrixXd& cost, double eta2,
                                          const Eigen::MatrixXd& support_hint) {
  const Index n = cost.rows();
  for (const double eps : {1e-7, 1e-6, 1e-5, 1e-8, 1e-4}) {
    std::vector<std::vector<Index>> rows(static_cast<size_t>(n));
    Index nnz = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (support_hint(i, j) > eps) {
          rows[static_cast<size_t>(i)].push_back(j);
          ++nnz;
        }
    if (nnz == 0) continue;

    // row i:  |S_i| a_i + sum_{j in S_i} b_j = sum_j c_ij - eta2
    // col j:  sum_{i in S_j} a_i + |S_j| b_j = sum_i c_ij - eta2
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    for (Index i = 0; i < n; ++i) {
      for (Index j : rows[static_cast<size_t>(i)]) {
        m(i, i) += 1.0;
        m(i, n + j) += 1.0;
        rhs[i] += cost(i, j);
        m(n + j, n + j) += 1.0;
        m(n + j, i) += 1.0;
        rhs[n + j] += cost(i, j);
      }
      rhs[i] -= eta2;
    }
    for (Index j = 0; j < n; ++j) rhs[n + j] -= eta2;
    // every row/col needs at least one support entry
    bool covered = true;
    for (Index i = 0; i < 2 * n; ++i)
      if (m(i, i) == 0.0) covered = false;
    if (!covered) continue;

    const Eigen::VectorXd sol = m.completeOrthogonalDecomposition().solve(rhs);
    if ((m * sol - rhs).cwiseAbs().maxCoeff() > 1e-9) continue;
    const Eigen::VectorXd alpha = sol.head(n);
    const Eigen::VectorXd beta = sol.tail(n);

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i)
      for (Index j : rows[static_cast<size_t>(i)]) {
        const double k = cost(i, j) - alpha[i] - beta[j];
        if (k < -1e-10 * scale) {
          ok = false;
          break;
        }
        a(i, j) = std::max(0.0, k) / eta2;
      }
    if (!ok) continue;

    // Off-support optimality (alpha_i + beta_j >= cost_ij) up to the free
    // per-component shift of the potentials.
    std::vector<Index> row_comp, col_comp;
    const Index comps = support_components(rows, n, row_comp, col_comp);
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd min_slack = Eigen::MatrixXd::Constant(comps, comps, inf);
    for (Index i = 0; i < n; ++i) {
      auto next = rows[static_cast<size_t>(i)].begin();
      for (Index j = 0; j < n; ++j) {
        if (next != rows[static_cast<size_t>(i)].end() && *next == j) {
          ++next;
          continue;
        }
        const double slack = alpha[i] + beta[j] - cost(i, j);
        double& cell = min_slack(row_comp[static_cast<size_t>(i)],
                                 col_comp[static_cast<size_t>(j)]);
        cell = std::min(cell, slack);
      }
    }
    if (shift_feasibility_violation(min_slack) > 1e-9 * scale) continue;
    const double row_dev = (a.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_dev = (a.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_dev > 1e-9 || col_dev > 1e-9) continue;
    return a;
  }
  return std::nullopt;
}

Eigen::MatrixXd qp_projection_oracle(const Eigen::MatrixXd& cost, double eta2) {
  const Eigen::MatrixXd b = cost.cwiseAbs() / eta2;
  // Projected gradient with step 1/eta2 reaches the projection of b in one
  // exact step. Dykstra supplies the projection; the KKT polish turns its
  // approximate support into the exact optimum and certifies it, so the
  // horizon only grows when certification fails.
  Eigen::MatrixXd a;
  for (long horizon : {2000L, 10000L, 60000L, 400000L}) {
    a = dykstra_project(b, horizon, horizon >= 60000 ? 1e-14 : 1e-12);
    const auto polished = kkt_polish(cost.cwiseAbs(), eta2, a);
    if (polished) return *polished;
  }
  return a;
}

void fd_dual_gradient(const dssc::dsproj::ProjectionProblem& p,
                      const dssc::dsproj::DualPotentials& pots, double step,
                      Eigen::VectorXd& grad_alpha, Eigen::VectorXd& grad_beta) {
  const Index n = p.size();
  grad_alpha.resize(n);
  grad_beta.resize(n);
  dssc::dsproj::DualPotentials work = pots;
  auto value = [&]() { return dssc::dsproj::dual_objective_grad(p, work).objective; };
  for (Index i = 0; i < n; ++i) {
    work.alpha[i] = pots.alpha[i] + step;
    const double up = value();
    work.alpha[i] = pots.alpha[i] - step;
    const double dn = value();
    work.alpha[i] = pots.alpha[i];
    grad_alpha[i] = (up - dn) / (2.0 * step);
  }
  for (Index j = 0; j < n; ++j) {
    work.beta[j] = pots.beta[j] + step;
    const double up = value();
    work.beta[j] = pots.beta[j] - step;
    const double dn = value();
    work.beta[j] = pots.beta[j];
    grad_beta[j] = (up - dn) / (2.0 * step);
  }
}

Eigen::VectorXd ista_column(const Eigen::MatrixXd& x, Index column, double eta1, double eta3,
                            long iterations) {
  const Index n = x.cols();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x,
                                                     Eigen::EigenvaluesOnly);
  const double step = 1.0 / (eig.eigenvalues().maxCoeff() + eta1);
  const Eigen::VectorXd target = x.col(column);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (long it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = x.transpose() * (x * c - target) + eta1 * c;
    Eigen::VectorXd next = c - step * grad;
    const double shrink = step * eta3;
    for (Index i = 0; i < n; ++i) {
      const double v = next[i];
      next[i] = v > shrink ? v - shrink : (v < -shrink ? v + shrink : 0.0);
    }
    next[column] = 0.0;
    if ((next - c).cwiseAbs().maxCoeff() < 1e-16) {
      c = next;
      break;
    }
    c = next;
  }
  return c;
}

double ensc_column_objective(const Eigen::MatrixXd& x, Index column, const Eigen::VectorXd& c,
                             double eta1, double eta3) {
  return 0.5 * (x.col(column) - x * c).squaredNorm() + 0.5 * eta1 * c.squaredNorm() +
         eta3 * c.lpNorm<1>();
}

double joint_model_kkt_residual(const Eigen::MatrixXd& cp, const Eigen::MatrixXd& cq,
                                const Eigen::MatrixXd& a, const Eigen::MatrixXd& x,
                                const dssc::DsscParams& params) {
  const Index n = cp.rows();
  const Eigen::MatrixXd resid = x * (cp - cq) - x;  // X C - X
  const Eigen::MatrixXd data_grad = x.transpose() * resid;
  const Eigen::MatrixXd couple = params.eta1 * ((cp + cq) - params.eta2 * a);
  const Eigen::MatrixXd gp = data_grad + couple;   // d/dCp
  const Eigen::MatrixXd gq = -data_grad + couple;  // d/dCq
  double worst = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double vp = gp(i, j) + params.eta3;
      const double vq = gq(i, j) + params.eta3;
      worst = std::max(worst, cp(i, j) > 1e-6 ? std::abs(vp) : std::max(0.0, -vp));
      worst = std::max(worst, cq(i, j) > 1e-6 ? std::abs(vq) : std::max(0.0, -vq));
    }

  // affinity block: grad_a + alpha_i + beta_j = 0 on the support, >= 0 off it
  const Eigen::MatrixXd ga = params.eta1 * params.eta2 * (params.eta2 * a - (cp + cq));
  std::vector<std::vector<Index>> support(static_cast<size_t>(n));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (a(i, j) > 1e-6) {
        support[static_cast<size_t>(i)].push_back(j);
        m(i, i) += 1.0;
        m(i, n + j) += 1.0;
        m(n + j, n + j) += 1.0;
        m(n + j, i) += 1.0;
        rhs[i] -= ga(i, j);
        rhs[n + j] -= ga(i, j);
      }
  const Eigen::VectorXd sol = m.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd alpha = sol.head(n);
  const Eigen::VectorXd beta = sol.tail(n);
  for (Index i = 0; i < n; ++i)
    for (Index j : support[static_cast<size_t>(i)])
      worst = std::max(worst, std::abs(ga(i, j) + alpha[i] + beta[j]));

  // off-support inequalities hold up to the free per-component shift
  std::vector<Index> row_comp, col_comp;
  const Index comps = support_components(support, n, row_comp, col_comp);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd min_slack = Eigen::MatrixXd::Constant(comps, comps, inf);
  for (Index i = 0; i < n; ++i) {
    auto next = support[static_cast<size_t>(i)].begin();
    for (Index j = 0; j < n; ++j) {
      if (next != support[static_cast<size_t>(i)].end() && *next == j) {
        ++next;
        continue;
      }
      const double v = ga(i, j) + alpha[i] + beta[j];
      double& cell =
          min_slack(row_comp[static_cast<size_t>(i)], col_comp[static_cast<size_t>(j)]);
      cell = std::min(cell, v);
    }
  }
  worst = std::max(worst, shift_feasibility_violation(min_slack));

  // primal feasibility of the affinity
  worst = std::max(worst, (a.rowwise().sum().array() - 1.0).abs().maxCoeff());
  worst = std::max(worst, (a.colwise().sum().array() - 1.0).abs().maxCoeff());
  return worst;
}

double brute_force_accuracy(const dssc::spectral::ClusterLabels& pred,
                            const dssc::spectral::ClusterLabels& truth) {
  const Index k = std::max(pred.k, truth.k);
  std::vector<int> perm(static_cast<size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    Index hits = 0;
    for (Index i = 0; i < pred.size(); ++i)
      if (perm[static_cast<size_t>(pred.ids[static_cast<size_t>(i)])] ==
          truth.ids[static_cast<size_t>(i)])
        ++hits;
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(pred.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double nmi_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
  const double n = static_cast<double>(pred.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (size_t i = 0; i < pred.size(); ++i) {
    joint[{pred[i], truth[i]}] += 1.0 / n;
    pa[pred[i]] += 1.0 / n;
    pb[truth[i]] += 1.0 / n;
  }
  double info = 0.0;
  for (const auto& [key, p] : joint) info += p * std::log(p / (pa[key.first] * pb[key.second]));
  double ha = 0.0, hb = 0.0;
  for (const auto& [_, p] : pa) ha -= p * std::log(p);
  for (const auto& [_, p] : pb) hb -= p * std::log(p);
  if (ha + hb == 0.0) return 1.0;
  return 2.0 * info / (ha + hb);
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
      m(i, j) = lo + (hi - lo) * u;
    }
  return m;
}

Eigen::MatrixXd random_gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      double u1 = uniform();
      while (u1 <= 0.0) u1 = uniform();
      m(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
    }
  return m;
}

}  // namespace oracles
