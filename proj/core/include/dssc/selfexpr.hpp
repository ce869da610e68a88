#pragma once

#include <Eigen/Dense>

#include "dssc/cost_oracle.hpp"
#include "dssc/types.hpp"

namespace dssc::selfexpr {

/// Precomputed d x d kernels for evaluating ridge-regression coefficients
/// entry by entry: C_ij = x_i' * m * x_j reproduces the unconstrained
/// closed form (X'X + gamma I)^{-1} X'X without ever forming an n x n
/// matrix. z_core = (gamma I + X X')^{-1} supports diagonal-corrected
/// dense evaluation.
struct WoodburyCache {
  double gamma = 0.0;
  Eigen::MatrixXd m;
  Eigen::MatrixXd z_core;
};

WoodburyCache build_woodbury_cache(const DataMatrix& x, double gamma);

/// Ridge-only (least squares regression) coefficients, dense path.
///
/// zero_diag=false returns the unconstrained closed form. zero_diag=true
/// returns the exact minimizer with diag(C)=0, obtained per column via the
/// Lagrange correction C = C0 - Z*diag(mu), mu_j = (C0)_jj / Z_jj with
/// Z = (X'X + gamma I)^{-1}.
CoeffMatrix lsr_dense(const DataMatrix& x, double gamma, bool zero_diag,
                      Index dense_cap = 8000);

/// Unconstrained ridge coefficients on a restricted support. O(nnz(S) * d)
/// time, O(nnz(S)) memory.
SparseRows lsr_entries(const WoodburyCache& cache, const DataMatrix& x,
                       const SupportPattern& s);

struct EnscOptions {
  double kkt_tol = 1e-6;
  int max_iter = 10000;
};

/// Elastic-net self-expression: each column c_j minimizes
///   0.5*||x_j - X c||^2 + (eta1/2)*||c||^2 + eta3*||c||_1,  c_j = 0,
/// solved by monotone FISTA until the soft-threshold optimality residual
/// drops below kkt_tol. eta3 = 0 delegates to the dense ridge path.
CoeffMatrix ensc_solve(const DataMatrix& x, double eta1, double eta3,
                       const EnscOptions& options = {});

/// Largest eigenvalue of X'X, computed through the smaller Gram matrix.
double gram_spectral_norm(const DataMatrix& x);

/// |C| of the unconstrained ridge solution as an on-demand cost, evaluated
/// entry-wise through the d x d kernel (never forms an n x n matrix). The
/// diagonal is structurally zero: the zero-diagonal model is honored by
/// keeping self-affinity out of every support. Holds a reference to x.
class LsrCostOracle final : public dsproj::CostOracle {
 public:
  LsrCostOracle(const DataMatrix& x, const WoodburyCache& cache);

  Index size() const override { return values_.cols(); }
  bool diag_is_zero() const override { return true; }
  double entry(Index i, Index j) const override;
  void dense_row(Index i, Eigen::VectorXd& out) const override;
  void dense_col(Index j, Eigen::VectorXd& out) const override { dense_row(j, out); }
  double row_max_bound(Index i) const override { return y_norms_[i] * max_col_norm_; }
  double col_max_bound(Index j) const override { return row_max_bound(j); }

 private:
  const Eigen::MatrixXd& values_;
  Eigen::MatrixXd y_;  // m * X, d x n; cost(i, j) = |y_i . x_j|
  Eigen::VectorXd y_norms_;
  double max_col_norm_ = 0.0;
};

}  // namespace dssc::selfexpr
