#include "dssc/dsproj.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dssc/lbfgs.hpp"
#include "dssc/parallel.hpp"

namespace dssc::dsproj {

namespace {

constexpr std::size_t kSerialWorkCutoff = 1 << 15;

template <typename Fn>
void for_each_index(Index n, std::size_t work_estimate, Fn&& fn) {
  if (work_estimate < kSerialWorkCutoff || thread_count() == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
  } else {
    parallel_for(0, n, std::function<void(Index)>(std::forward<Fn>(fn)), /*grain=*/8);
  }
}

}  // namespace

// allocation-free evaluation core over the flat compressed cost
void eval_dual_restricted(const ProjectionProblem& p, const DualPotentials& pots,
                          DualEval& eval, Eigen::VectorXd& sq_rows) {
  const Index n = p.size();
  const double eta2 = p.eta2();
  // branchless rectifier: the activation pattern changes every evaluation,
  // so a data-dependent branch here mispredicts its way to 4x slower
  const std::size_t work = p.row_val_.size();
  for_each_index(n, work, [&](Index i) {
    double sum = 0.0, sq = 0.0;
    const double ai = pots.alpha[i];
    const Index end = p.row_ptr_[static_cast<size_t>(i) + 1];
    for (Index t = p.row_ptr_[static_cast<size_t>(i)]; t < end; ++t) {
      const double k = p.row_val_[static_cast<size_t>(t)] - ai -
                       pots.beta[p.row_col_[static_cast<size_t>(t)]];
      const double kp = std::max(k, 0.0);
      sum += kp;
      sq += kp * kp;
    }
    eval.grad_alpha[i] = -1.0 + sum / eta2;
    sq_rows[i] = sq;
  });
  for_each_index(n, work, [&](Index j) {
    double sum = 0.0;
    const double bj = pots.beta[j];
    const Index end = p.col_ptr_[static_cast<size_t>(j) + 1];
    for (Index t = p.col_ptr_[static_cast<size_t>(j)]; t < end; ++t) {
      const double k = p.col_val_[static_cast<size_t>(t)] -
                       pots.alpha[p.col_row_[static_cast<size_t>(t)]] - bj;
      sum += std::max(k, 0.0);
    }
    eval.grad_beta[j] = -1.0 + sum / eta2;
  });
}

namespace {

// shared by the public entry point and the solver's inner loop
void eval_dual_into(const ProjectionProblem& p, const DualPotentials& pots, DualEval& eval,
                    Eigen::VectorXd& sq_rows) {
  const Index n = p.size();
  const double eta2 = p.eta2();
  eval.grad_alpha.resize(n);
  eval.grad_beta.resize(n);
  sq_rows.resize(n);

  if (p.full_support()) {
    for_each_index(n, static_cast<std::size_t>(n) * static_cast<std::size_t>(n), [&](Index i) {
      const Eigen::ArrayXd k =
          (p.dense_cost_rows().row(i).transpose().array() - pots.alpha[i] - pots.beta.array()).max(0.0);
      eval.grad_alpha[i] = -1.0 + k.sum() / eta2;
      sq_rows[i] = (k * k).sum();
    });
    for_each_index(n, static_cast<std::size_t>(n) * static_cast<std::size_t>(n), [&](Index j) {
      const Eigen::ArrayXd k =
          (p.dense_cost().col(j).array() - pots.alpha.array() - pots.beta[j]).max(0.0);
      eval.grad_beta[j] = -1.0 + k.sum() / eta2;
    });
  } else {
    eval_dual_restricted(p, pots, eval, sq_rows);
  }
  eval.objective = -(pots.alpha.sum() + pots.beta.sum()) - sq_rows.sum() / (2.0 * eta2);
}

}  // namespace

Index ProjectionProblem::support_nnz() const {
  return full_ ? n_ * n_ : cost_.nnz();
}

void ProjectionProblem::build_flat() {
  const Index nnz = cost_.nnz();
  row_ptr_.assign(static_cast<size_t>(n_) + 1, 0);
  row_col_.resize(static_cast<size_t>(nnz));
  row_val_.resize(static_cast<size_t>(nnz));
  Index at = 0;
  for (Index i = 0; i < n_; ++i) {
    for (const auto& e : cost_.row(i)) {
      row_col_[static_cast<size_t>(at)] = e.col;
      row_val_[static_cast<size_t>(at)] = e.value;
      ++at;
    }
    row_ptr_[static_cast<size_t>(i) + 1] = at;
  }
  col_ptr_.assign(static_cast<size_t>(n_) + 1, 0);
  col_row_.resize(static_cast<size_t>(nnz));
  col_val_.resize(static_cast<size_t>(nnz));
  at = 0;
  for (Index j = 0; j < n_; ++j) {
    for (const auto& e : cost_t_.row(j)) {
      col_row_[static_cast<size_t>(at)] = e.col;
      col_val_[static_cast<size_t>(at)] = e.value;
      ++at;
    }
    col_ptr_[static_cast<size_t>(j) + 1] = at;
  }
}

ProjectionProblem ProjectionProblem::from_cost_matrix(const SparseRows& cost,
                                                      const SupportPattern& s, double eta2) {
  if (!(eta2 > 0.0)) throw ValidationError("projection: eta2 must be > 0");
  if (!cost.is_square() || cost.rows() != s.size())
    throw ValidationError("projection: cost/support shape mismatch");
  ProjectionProblem p;
  p.n_ = s.size();
  p.eta2_ = eta2;
  p.cost_ = SparseRows(p.n_, p.n_);
  for (Index i = 0; i < p.n_; ++i) {
    const auto& stored = cost.row(i);
    auto& dst = p.cost_.row(i);
    dst.reserve(s.row(i).size());
    size_t t = 0;
    for (Index j : s.row(i)) {
      while (t < stored.size() && stored[t].col < j) ++t;
      if (t == stored.size() || stored[t].col != j)
        throw ValidationError("projection: missing cost entry on support at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      const double v = stored[t].value;
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("projection: cost entries must be nonnegative and finite");
      dst.push_back({j, v});
    }
  }
  p.cost_t_ = p.cost_.transposed();
  p.build_flat();
  return p;
}

ProjectionProblem ProjectionProblem::from_oracle(const CostOracle& cost, const SupportPattern& s,
                                                 double eta2) {
  if (!(eta2 > 0.0)) throw ValidationError("projection: eta2 must be > 0");
  if (cost.size() != s.size()) throw ValidationError("projection: cost/support shape mismatch");
  ProjectionProblem p;
  p.n_ = s.size();
  p.eta2_ = eta2;
  p.cost_ = SparseRows(p.n_, p.n_);
  for_each_index(p.n_, static_cast<std::size_t>(s.nnz()) * 8,
                 [&](Index i) {
                   auto& dst = p.cost_.row(i);
                   const auto& cols = s.row(i);
                   dst.reserve(cols.size());
                   for (Index j : cols) dst.push_back({j, cost.entry(i, j)});
                 });
  p.cost_t_ = p.cost_.transposed();
  p.build_flat();
  return p;
}

ProjectionProblem ProjectionProblem::full(Eigen::MatrixXd cost, double eta2) {
  if (!(eta2 > 0.0)) throw ValidationError("projection: eta2 must be > 0");
  if (cost.rows() != cost.cols()) throw ValidationError("projection: cost not square");
  if (!cost.allFinite()) throw ValidationError("projection: non-finite cost entry");
  ProjectionProblem p;
  p.n_ = cost.rows();
  p.eta2_ = eta2;
  p.full_ = true;
  p.dense_ = cost.cwiseAbs();
  p.dense_rm_ = p.dense_;
  return p;
}

DualEval dual_objective_grad(const ProjectionProblem& p, const DualPotentials& pots) {
  if (pots.alpha.size() != p.size() || pots.beta.size() != p.size())
    throw ValidationError("dual_objective_grad: potential size mismatch");
  DualEval eval;
  Eigen::VectorXd sq_rows;
  eval_dual_into(p, pots, eval, sq_rows);
  return eval;
}

SolveDualResult solve_dual(const ProjectionProblem& p, DualPotentials init,
                           const SolveDualOptions& options) {
  const Index n = p.size();
  if (init.alpha.size() == 0) init = DualPotentials::zeros(n);
  Eigen::VectorXd x0(2 * n);
  x0 << init.alpha, init.beta;

  LbfgsOptions lopt;
  lopt.memory = options.memory;
  lopt.max_iterations = options.max_iterations;
  lopt.grad_inf_tol = options.grad_tol;
  lopt.divergence_f = -1e12;
  lopt.divergence_x = 1e10;

  DualPotentials work = DualPotentials::zeros(n);
  DualEval eval;
  Eigen::VectorXd sq_rows;
  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    work.alpha = x.head(n);
    work.beta = x.tail(n);
    eval_dual_into(p, work, eval, sq_rows);
    grad.resize(2 * n);
    grad.head(n) = -eval.grad_alpha;
    grad.tail(n) = -eval.grad_beta;
    return -eval.objective;
  };

  const LbfgsResult res = lbfgs_minimize(objective, std::move(x0), lopt);
  if (res.diverged)
    throw ConvergenceError(
        "solve_dual: potentials diverged — the working support admits no doubly stochastic "
        "pattern; augment the support");
  if (!res.converged)
    throw ConvergenceError("solve_dual: iteration cap " + std::to_string(options.max_iterations) +
                           " reached with gradient inf-norm " + std::to_string(res.grad.lpNorm<Eigen::Infinity>()));
  SolveDualResult out;
  out.pots.alpha = res.x.head(n);
  out.pots.beta = res.x.tail(n);
  out.objective = -res.f;
  out.grad_inf = res.grad.lpNorm<Eigen::Infinity>();
  out.iterations = res.iterations;
  return out;
}

SparseRows recover_primal(const ProjectionProblem& p, const DualPotentials& pots) {
  const Index n = p.size();
  const double eta2 = p.eta2();
  SparseRows out(n, n);
  if (p.full_support()) {
    const Eigen::MatrixXd& cost = p.dense_cost();
    for (Index i = 0; i < n; ++i) {
      auto& dst = out.row(i);
      for (Index j = 0; j < n; ++j) {
        const double k = cost(i, j) - pots.alpha[i] - pots.beta[j];
        if (k > 0.0) dst.push_back({j, k / eta2});
      }
    }
    return out;
  }
  for (Index i = 0; i < n; ++i) {
    auto& dst = out.row(i);
    for (const auto& e : p.cost_rows().row(i)) {
      const double k = e.value - pots.alpha[i] - pots.beta[e.col];
      if (k > 0.0) dst.push_back({e.col, k / eta2});
    }
  }
  return out;
}

SparseRows recover_primal_unrestricted(const CostOracle& cost, double eta2,
                                       const DualPotentials& pots, bool forbid_diag) {
  const Index n = cost.size();
  SparseRows out(n, n);

  // Columns sorted by beta: only beta_j < (row cost bound) - alpha_i can
  // ever activate, so most rows touch a short prefix.
  std::vector<Index> bidx(static_cast<size_t>(n));
  std::iota(bidx.begin(), bidx.end(), Index(0));
  std::sort(bidx.begin(), bidx.end(),
            [&](Index a, Index b) { return pots.beta[a] < pots.beta[b]; });
  Eigen::VectorXd beta_sorted(n);
  for (Index t = 0; t < n; ++t) beta_sorted[t] = pots.beta[bidx[static_cast<size_t>(t)]];

  auto candidates_below = [&](double limit) {
    return static_cast<Index>(std::lower_bound(beta_sorted.data(), beta_sorted.data() + n, limit) -
                              beta_sorted.data());
  };

  if (cost.sparse()) {
    for_each_index(n, static_cast<std::size_t>(n) * 32, [&](Index i) {
      auto& dst = out.row(i);
      const double ai = pots.alpha[i];
      const auto& stored = *cost.sparse_row(i);
      for (const auto& e : stored) {
        if (forbid_diag && e.col == i) continue;
        const double k = e.value - ai - pots.beta[e.col];
        if (k > 0.0) dst.push_back({e.col, k / eta2});
      }
      // off-pattern entries have zero cost: they activate iff beta_j < -alpha_i
      const Index m = candidates_below(-ai);
      for (Index t = 0; t < m; ++t) {
        const Index j = bidx[static_cast<size_t>(t)];
        if (forbid_diag && j == i) continue;
        bool on_pattern = false;
        {
          auto it = std::lower_bound(stored.begin(), stored.end(), j,
                                     [](const SparseEntry& e, Index c) { return e.col < c; });
          on_pattern = it != stored.end() && it->col == j;
        }
        if (on_pattern) continue;
        const double k = -ai - pots.beta[j];
        if (k > 0.0) dst.push_back({j, k / eta2});
      }
      std::sort(dst.begin(), dst.end(),
                [](const SparseEntry& a, const SparseEntry& b) { return a.col < b.col; });
    });
    return out;
  }

  Eigen::VectorXd row_buf(n);
  const bool parallel = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) >=
                        kSerialWorkCutoff && thread_count() > 1;
  auto process_row = [&](Index i, Eigen::VectorXd& buf) {
    auto& dst = out.row(i);
    const double ai = pots.alpha[i];
    const Index m = candidates_below(cost.row_max_bound(i) - ai);
    if (m > n / 2) {
      cost.dense_row(i, buf);
      for (Index j = 0; j < n; ++j) {
        if (forbid_diag && j == i) continue;
        const double k = buf[j] - ai - pots.beta[j];
        if (k > 0.0) dst.push_back({j, k / eta2});
      }
      return;
    }
    for (Index t = 0; t < m; ++t) {
      const Index j = bidx[static_cast<size_t>(t)];
      if (forbid_diag && j == i) continue;
      const double k = cost.entry(i, j) - ai - pots.beta[j];
      if (k > 0.0) dst.push_back({j, k / eta2});
    }
    std::sort(dst.begin(), dst.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.col < b.col; });
  };
  if (parallel) {
    parallel_for(0, n, [&](Index i) {
      thread_local Eigen::VectorXd buf;
      buf.resize(n);
      process_row(i, buf);
    }, 4);
  } else {
    for (Index i = 0; i < n; ++i) process_row(i, row_buf);
  }
  return out;
}

ActiveSetResult active_set_project(const CostOracle& cost, double eta2, const SupportPattern& s0,
                                   const ActiveSetOptions& options) {
  const Index n = cost.size();
  if (s0.size() != n) throw ValidationError("active_set_project: support size mismatch");

  SupportPattern support(n);
  for (Index i = 0; i < n; ++i)
    for (Index j : s0.row(i)) {
      if (options.forbid_diag && i == j) continue;
      support.insert(i, j);
    }

  DualPotentials pots = DualPotentials::zeros(n);
  SolveDualOptions dual_opts = options.dual;
  long long total_dual_iters = 0;
  int tighten_retries = 0;

  for (int outer = 1; outer <= options.max_outer; ++outer) {
    const ProjectionProblem problem = ProjectionProblem::from_oracle(cost, support, eta2);
    SolveDualResult res = solve_dual(problem, pots, dual_opts);
    pots = res.pots;  // warm start for the next outer round
    total_dual_iters += res.iterations;

    SparseRows unrestricted =
        recover_primal_unrestricted(cost, eta2, pots, options.forbid_diag);
    const Eigen::VectorXd rs = unrestricted.row_sums();
    const Eigen::VectorXd cs = unrestricted.col_sums();
    const double dev = std::max((rs.array() - 1.0).abs().maxCoeff(),
                                (cs.array() - 1.0).abs().maxCoeff());
    if (dev <= options.feasibility_tol) {
      ActiveSetResult out{StochasticAffinity(std::move(unrestricted), options.feasibility_tol),
                          outer, total_dual_iters, support.nnz(), pots};
      return out;
    }

    const Index added = support.unite(unrestricted);
    if (added == 0) {
      // No off-support activation, yet infeasible: the restricted solve was
      // not tight enough. Tighten and retry before giving up.
      if (tighten_retries < 3) {
        dual_opts.grad_tol *= 1e-2;
        dual_opts.max_iterations *= 2;
        ++tighten_retries;
        continue;
      }
      throw ConvergenceError("active_set_project: support stalled at deviation " +
                             std::to_string(dev));
    }
  }
  throw ConvergenceError("active_set_project: outer iteration cap " +
                         std::to_string(options.max_outer) + " reached");
}

SupportPattern init_support(const CostOracle& cost, const SupportInitOptions& options) {
  const Index n = cost.size();
  if (options.k_top < 0 || options.n_perms < 0)
    throw ValidationError("init_support: negative option");
  if (options.k_top == 0 && options.n_perms == 0)
    throw ValidationError("init_support: need k_top or n_perms to be positive");

  const bool skip_diag = options.forbid_diag || cost.diag_is_zero();
  std::vector<std::vector<Index>> rows(static_cast<size_t>(n));

  if (options.k_top > 0) {
    // selection order: value descending, index ascending on ties
    auto before = [](const std::pair<double, Index>& a, const std::pair<double, Index>& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    };
    for_each_index(n, static_cast<std::size_t>(n) * static_cast<std::size_t>(n), [&](Index i) {
      thread_local Eigen::VectorXd row;
      thread_local std::vector<std::pair<double, Index>> top;
      row.resize(n);
      cost.dense_row(i, row);
      top.clear();
      const Index take = std::min<Index>(options.k_top, skip_diag ? n - 1 : n);
      // bounded min-heap (heap front = weakest kept candidate)
      for (Index j = 0; j < n; ++j) {
        if (skip_diag && j == i) continue;
        const std::pair<double, Index> cand(row[j], j);
        if (static_cast<Index>(top.size()) < take) {
          top.push_back(cand);
          std::push_heap(top.begin(), top.end(), before);
        } else if (before(cand, top.front())) {
          std::pop_heap(top.begin(), top.end(), before);
          top.back() = cand;
          std::push_heap(top.begin(), top.end(), before);
        }
      }
      auto& dst = rows[static_cast<size_t>(i)];
      dst.resize(top.size());
      for (size_t t = 0; t < top.size(); ++t) dst[t] = top[t].second;
    });
  }

  std::mt19937_64 rng(options.seed);
  for (Index t = 0; t < options.n_perms; ++t) {
    std::vector<Index> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), Index(0));
    for (Index i = n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    }
    if (options.forbid_diag) {
      std::vector<Index> fixed;
      for (Index i = 0; i < n; ++i)
        if (perm[static_cast<size_t>(i)] == i) fixed.push_back(i);
      if (fixed.size() == 1) {
        const Index f = fixed.front();
        const Index j = (f + 1) % n;
        std::swap(perm[static_cast<size_t>(f)], perm[static_cast<size_t>(j)]);
      } else if (fixed.size() > 1) {
        for (size_t t2 = 0; t2 < fixed.size(); ++t2)
          perm[static_cast<size_t>(fixed[t2])] = fixed[(t2 + 1) % fixed.size()];
      }
    }
    for (Index i = 0; i < n; ++i)
      rows[static_cast<size_t>(i)].push_back(perm[static_cast<size_t>(i)]);
  }
  return SupportPattern::from_rows(std::move(rows));
}

FullDualResult project_full_dual(Eigen::MatrixXd cost, double eta2,
                                 const SolveDualOptions& options, double feasibility_tol) {
  ProjectionProblem p = ProjectionProblem::full(std::move(cost), eta2);
  SolveDualResult res = solve_dual(p, DualPotentials::zeros(p.size()), options);
  SparseRows a = recover_primal(p, res.pots);
  return {StochasticAffinity(std::move(a), feasibility_tol), std::move(res)};
}

Eigen::MatrixXd project_affine_sums(const Eigen::MatrixXd& m) {
  const Index n = m.rows();
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(n) - m.rowwise().sum();
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(n) - m.colwise().sum().transpose();
  const double s = r.sum() / static_cast<double>(n);
  const Eigen::VectorXd u = r / static_cast<double>(n) -
                            Eigen::VectorXd::Constant(n, s / (2.0 * static_cast<double>(n)));
  const Eigen::VectorXd v = c / static_cast<double>(n) -
                            Eigen::VectorXd::Constant(n, s / (2.0 * static_cast<double>(n)));
  return m + u * Eigen::RowVectorXd::Ones(n) + Eigen::VectorXd::Ones(n) * v.transpose();
}

AltProjResult altproj_project(const Eigen::MatrixXd& cost, double eta2, int max_iter,
                              double tol) {
  if (cost.rows() != cost.cols()) throw ValidationError("altproj: cost not square");
  if (!(eta2 > 0.0)) throw ValidationError("altproj: eta2 must be > 0");
  AltProjResult out;
  out.a = cost.cwiseAbs() / eta2;
  for (int iter = 1; iter <= max_iter; ++iter) {
    out.a = project_affine_sums(out.a).cwiseMax(0.0);
    const double row_dev = (out.a.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_dev = (out.a.colwise().sum().array() - 1.0).abs().maxCoeff();
    out.iterations = iter;
    out.max_dev = std::max(row_dev, col_dev);
    if (out.max_dev <= tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace dssc::dsproj
