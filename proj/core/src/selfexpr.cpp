#include "dssc/selfexpr.hpp"

#include <cmath>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "dssc/parallel.hpp"

namespace dssc::selfexpr {

double gram_spectral_norm(const DataMatrix& x) {
  const Eigen::MatrixXd& v = x.values();
  Eigen::MatrixXd gram;
  if (v.rows() <= v.cols())
    gram = v * v.transpose();  // d x d
  else
    gram = v.transpose() * v;  // n x n
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

WoodburyCache build_woodbury_cache(const DataMatrix& x, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("woodbury: gamma must be > 0");
  const Eigen::MatrixXd& v = x.values();
  const Index d = v.rows();
  const Eigen::MatrixXd xxt = v * v.transpose();
  Eigen::MatrixXd shifted = xxt;
  shifted.diagonal().array() += gamma;
  WoodburyCache cache;
  cache.gamma = gamma;
  cache.z_core = shifted.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
  cache.m = (Eigen::MatrixXd::Identity(d, d) - cache.z_core * xxt) / gamma;
  cache.m = 0.5 * (cache.m + cache.m.transpose().eval());
  cache.z_core = 0.5 * (cache.z_core + cache.z_core.transpose().eval());
  return cache;
}

CoeffMatrix lsr_dense(const DataMatrix& x, double gamma, bool zero_diag, Index dense_cap) {
  if (!(gamma > 0.0)) throw ValidationError("lsr_dense: gamma must be > 0");
  const Eigen::MatrixXd& v = x.values();
  const Index d = v.rows();
  const Index n = v.cols();
  if (n > dense_cap)
    throw ValidationError("lsr_dense: n=" + std::to_string(n) + " exceeds dense cap " +
                          std::to_string(dense_cap));

  Eigen::MatrixXd c0;
  // Columns of Z = (X'X + gamma I)^{-1} are needed for the diagonal
  // correction; w holds enough to reconstruct them without an n x n temp.
  Eigen::MatrixXd w;           // d x n, = z_core * X   (underdetermined case)
  Eigen::MatrixXd z_direct;    // n x n                 (overdetermined case)
  const bool use_woodbury = d < n;
  if (use_woodbury) {
    const WoodburyCache cache = build_woodbury_cache(x, gamma);
    c0 = v.transpose() * (cache.m * v);
    w = cache.z_core * v;
  } else {
    Eigen::MatrixXd gram = v.transpose() * v;
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += gamma;
    z_direct = shifted.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
    c0 = z_direct * gram;
  }

  if (zero_diag) {
    for (Index j = 0; j < n; ++j) {
      Eigen::VectorXd z_col;
      double z_jj;
      if (use_woodbury) {
        z_col = -(v.transpose() * w.col(j)) / gamma;
        z_col[j] += 1.0 / gamma;
        z_jj = z_col[j];
      } else {
        z_col = z_direct.col(j);
        z_jj = z_direct(j, j);
      }
      const double mu = c0(j, j) / z_jj;
      c0.col(j) -= mu * z_col;
      c0(j, j) = 0.0;
    }
  }
  if (!c0.allFinite()) throw ValidationError("lsr_dense: non-finite result");
  return CoeffMatrix::from_dense(c0, zero_diag);
}

SparseRows lsr_entries(const WoodburyCache& cache, const DataMatrix& x,
                       const SupportPattern& s) {
  const Eigen::MatrixXd& v = x.values();
  const Index n = v.cols();
  if (s.size() != n) throw ValidationError("lsr_entries: support size mismatch");
  SparseRows out(n, n);
  parallel_for(0, n, [&](Index i) {
    const auto& cols = s.row(i);
    if (cols.empty()) return;
    const Eigen::VectorXd y = cache.m * v.col(i);
    auto& dst = out.row(i);
    dst.reserve(cols.size());
    for (Index j : cols) dst.push_back({j, y.dot(v.col(j))});
  });
  return out;
}

namespace {

struct ColumnFailure {
  Index column = -1;
  double residual = 0.0;
};

// Optimality residual of the soft-threshold conditions for one column.
double kkt_residual(const Eigen::VectorXd& c, const Eigen::VectorXd& grad_smooth,
                    double eta3, Index skip) {
  double worst = 0.0;
  for (Index i = 0; i < c.size(); ++i) {
    if (i == skip) continue;
    double r;
    if (c[i] > 0.0)
      r = std::abs(grad_smooth[i] + eta3);
    else if (c[i] < 0.0)
      r = std::abs(grad_smooth[i] - eta3);
    else
      r = std::max(0.0, std::abs(grad_smooth[i]) - eta3);
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace

LsrCostOracle::LsrCostOracle(const DataMatrix& x, const WoodburyCache& cache)
    : values_(x.values()) {
  y_ = cache.m * values_;
  y_norms_ = y_.colwise().norm();
  max_col_norm_ = values_.colwise().norm().maxCoeff();
}

double LsrCostOracle::entry(Index i, Index j) const {
  if (i == j) return 0.0;
  return std::abs(y_.col(i).dot(values_.col(j)));
}

void LsrCostOracle::dense_row(Index i, Eigen::VectorXd& out) const {
  out = (values_.transpose() * y_.col(i)).cwiseAbs();
  out[i] = 0.0;
}

CoeffMatrix ensc_solve(const DataMatrix& x, double eta1, double eta3,
                       const EnscOptions& options) {
  if (!(eta1 > 0.0)) throw ValidationError("ensc: eta1 must be > 0");
  if (!(eta3 >= 0.0)) throw ValidationError("ensc: eta3 must be >= 0");
  if (eta3 == 0.0) return lsr_dense(x, eta1, /*zero_diag=*/true);

  const Eigen::MatrixXd& v = x.values();
  const Index n = v.cols();
  const double lip = gram_spectral_norm(x) + eta1;
  const double step = 1.0 / lip;

  std::vector<std::vector<CoeffMatrix::ColEntry>> columns(static_cast<size_t>(n));
  std::mutex fail_mutex;
  ColumnFailure worst_failure;

  parallel_for(0, n, [&](Index j) {
    const Eigen::VectorXd target = v.col(j);
    auto objective = [&](const Eigen::VectorXd& c) {
      const Eigen::VectorXd resid = v * c - target;
      return 0.5 * resid.squaredNorm() + 0.5 * eta1 * c.squaredNorm() +
             eta3 * c.template lpNorm<1>();
    };

    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd c_prev = c;
    Eigen::VectorXd y = c;
    double t = 1.0;
    double f_c = objective(c);
    double residual = std::numeric_limits<double>::infinity();
    bool done = false;

    for (int iter = 0; iter < options.max_iter && !done; ++iter) {
      const Eigen::VectorXd grad = v.transpose() * (v * y - target) + eta1 * y;
      Eigen::VectorXd z = y - step * grad;
      const double shrink = step * eta3;
      for (Index i = 0; i < n; ++i) {
        const double zi = z[i];
        z[i] = zi > shrink ? zi - shrink : (zi < -shrink ? zi + shrink : 0.0);
      }
      z[j] = 0.0;

      // adaptive restart when the momentum fights the descent direction
      if (iter > 0 && (y - z).dot(z - c) > 0.0) {
        t = 1.0;
        y = c;
        continue;
      }

      // monotone accept: keep the better of the proximal point and the
      // previous iterate, momentum still uses the proximal point
      const double f_z = objective(z);
      c_prev = c;
      if (f_z <= f_c) {
        c = z;
        f_c = f_z;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = c + (t / t_next) * (z - c) + ((t - 1.0) / t_next) * (c - c_prev);
      t = t_next;

      if (iter % 8 == 0 || iter + 1 == options.max_iter) {
        const Eigen::VectorXd grad_c = v.transpose() * (v * c - target) + eta1 * c;
        residual = kkt_residual(c, grad_c, eta3, j);
        done = residual <= options.kkt_tol;
      }
    }
    if (!done) {
      const Eigen::VectorXd grad_c = v.transpose() * (v * c - target) + eta1 * c;
      residual = kkt_residual(c, grad_c, eta3, j);
      done = residual <= options.kkt_tol;
    }

    if (!done) {
      std::lock_guard<std::mutex> lock(fail_mutex);
      if (residual > worst_failure.residual) worst_failure = {j, residual};
      return;
    }
    auto& dst = columns[static_cast<size_t>(j)];
    for (Index i = 0; i < n; ++i)
      if (c[i] != 0.0) dst.push_back({i, c[i]});
  });

  if (worst_failure.column >= 0)
    throw ConvergenceError("ensc: column " + std::to_string(worst_failure.column) +
                           " did not reach KKT tol (residual " +
                           std::to_string(worst_failure.residual) + ")");

  CoeffMatrix out(n, /*zero_diag=*/true);
  for (Index j = 0; j < n; ++j)
    for (const auto& e : columns[static_cast<size_t>(j)]) out.insert(e.row, j, e.value);
  out.sort_columns();
  return out;
}

}  // namespace dssc::selfexpr
