#pragma once

#include <Eigen/Dense>

#include "dssc/types.hpp"

namespace dssc::dsproj {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// On-demand access to a nonnegative n x n cost matrix (the rectified
/// self-expressive coefficients). Lets the projection machinery touch only
/// the entries it needs, so a dense coefficient matrix never has to be
/// materialized.
class CostOracle {
 public:
  virtual ~CostOracle() = default;

  virtual Index size() const = 0;
  /// True when the diagonal is structurally zero (zero-diagonal C).
  virtual bool diag_is_zero() const = 0;

  virtual double entry(Index i, Index j) const = 0;
  /// Writes row i (length n) into out.
  virtual void dense_row(Index i, Eigen::VectorXd& out) const = 0;
  virtual void dense_col(Index j, Eigen::VectorXd& out) const = 0;

  /// Upper bound on max_j cost(i, j); used to short-circuit row scans.
  virtual double row_max_bound(Index i) const = 0;
  virtual double col_max_bound(Index j) const = 0;

  /// Sparse oracles expose their stored pattern; entries off the pattern
  /// are exactly zero.
  virtual bool sparse() const { return false; }
  virtual const std::vector<SparseEntry>* sparse_row(Index) const { return nullptr; }
  virtual const std::vector<SparseEntry>* sparse_col(Index) const { return nullptr; }
};

/// Wraps a dense matrix; absolute values are taken on construction. Stored
/// row-major: every consumer sweeps rows.
class DenseCostOracle final : public CostOracle {
 public:
  explicit DenseCostOracle(const Eigen::MatrixXd& cost, bool zero_diag = false);

  Index size() const override { return cost_.rows(); }
  bool diag_is_zero() const override { return zero_diag_; }
  double entry(Index i, Index j) const override { return cost_(i, j); }
  void dense_row(Index i, Eigen::VectorXd& out) const override {
    out = cost_.row(i).transpose();
  }
  void dense_col(Index j, Eigen::VectorXd& out) const override { out = cost_.col(j); }
  double row_max_bound(Index i) const override { return row_max_[i]; }
  double col_max_bound(Index j) const override { return col_max_[j]; }

 private:
  RowMajorMatrix cost_;
  Eigen::VectorXd row_max_, col_max_;
  bool zero_diag_;
};

/// Wraps a sparse matrix; absolute values are taken on construction and
/// off-pattern entries are exactly zero.
class SparseCostOracle final : public CostOracle {
 public:
  explicit SparseCostOracle(const SparseRows& cost, bool zero_diag = false);

  Index size() const override { return rows_.rows(); }
  bool diag_is_zero() const override { return zero_diag_; }
  double entry(Index i, Index j) const override;
  void dense_row(Index i, Eigen::VectorXd& out) const override;
  void dense_col(Index j, Eigen::VectorXd& out) const override;
  double row_max_bound(Index i) const override { return row_max_[i]; }
  double col_max_bound(Index j) const override { return col_max_[j]; }
  bool sparse() const override { return true; }
  const std::vector<SparseEntry>* sparse_row(Index i) const override { return &rows_.row(i); }
  const std::vector<SparseEntry>* sparse_col(Index j) const override { return &cols_.row(j); }

 private:
  SparseRows rows_;
  SparseRows cols_;  // transposed view
  Eigen::VectorXd row_max_, col_max_;
  bool zero_diag_;
};

}  // namespace dssc::dsproj
