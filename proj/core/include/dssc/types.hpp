#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dssc/sparse.hpp"

namespace dssc {

/// Bad input: shape mismatch, out-of-range value, constraint violation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver hit its cap or diverged. Carries diagnostics in what().
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File read/write or parse failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kDefaultFeasibilityTol = 1e-4;
constexpr double kUnitNormTol = 1e-12;

/// Dense d x n point set, one data point per column.
class DataMatrix {
 public:
  DataMatrix(Eigen::MatrixXd values, bool unit_normalized = false);

  Index dim() const { return values_.rows(); }
  Index num_points() const { return values_.cols(); }
  bool unit_normalized() const { return unit_normalized_; }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd col(Index j) const { return values_.col(j); }

 private:
  Eigen::MatrixXd values_;
  bool unit_normalized_;
};

/// Sparse n x n self-expressive coefficients, stored per column.
class CoeffMatrix {
 public:
  struct ColEntry {
    Index row = 0;
    double value = 0.0;
  };

  CoeffMatrix(Index n, bool zero_diag);

  Index size() const { return static_cast<Index>(columns_.size()); }
  bool zero_diag() const { return zero_diag_; }
  Index nnz() const;

  std::vector<ColEntry>& column(Index j) { return columns_[static_cast<size_t>(j)]; }
  const std::vector<ColEntry>& column(Index j) const {
    return columns_[static_cast<size_t>(j)];
  }

  /// Appends (i, j, value); rejects diagonal entries when zero_diag is set
  /// and non-finite values always.
  void insert(Index i, Index j, double value);
  void sort_columns();

  Eigen::MatrixXd to_dense() const;
  /// Row-major view of the entries (optionally of their absolute values).
  SparseRows to_rows(bool absolute = false) const;

  static CoeffMatrix from_dense(const Eigen::MatrixXd& c, bool zero_diag,
                                double drop_tol = 0.0);

 private:
  std::vector<std::vector<ColEntry>> columns_;
  bool zero_diag_;
};

struct AffinityReport {
  double max_row_dev = 0.0;
  double max_col_dev = 0.0;
  double min_entry = 0.0;
  bool pass = false;
};

/// Deviations of a square nonnegative matrix from unit row/column sums.
AffinityReport validate_affinity(const SparseRows& a, double tol = kDefaultFeasibilityTol);

/// Nonnegative sparse n x n matrix with row and column sums within
/// feasibility_tol of 1. The constructor enforces membership.
class StochasticAffinity {
 public:
  explicit StochasticAffinity(SparseRows entries,
                              double feasibility_tol = kDefaultFeasibilityTol);

  Index size() const { return entries_.rows(); }
  double feasibility_tol() const { return feasibility_tol_; }
  const SparseRows& entries() const { return entries_; }
  const AffinityReport& report() const { return report_; }

 private:
  SparseRows entries_;
  double feasibility_tol_;
  AffinityReport report_;
};

AffinityReport validate_affinity(const StochasticAffinity& a,
                                 double tol = kDefaultFeasibilityTol);

/// Binary n x n sparsity mask, one sorted column-index list per row.
class SupportPattern {
 public:
  SupportPattern() = default;
  explicit SupportPattern(Index n, bool include_diagonal = false);

  Index size() const { return static_cast<Index>(rows_.size()); }
  bool include_diagonal() const { return include_diagonal_; }
  Index nnz() const;

  const std::vector<Index>& row(Index i) const { return rows_[static_cast<size_t>(i)]; }

  /// Inserts index (i, j); keeps rows sorted and duplicate-free.
  void insert(Index i, Index j);
  bool contains(Index i, Index j) const;

  /// Bulk constructor: sorts and deduplicates each row, validates ranges.
  static SupportPattern from_rows(std::vector<std::vector<Index>> rows);

  /// In-place union with the pattern of another support. Returns the number
  /// of indices actually added.
  Index unite(const SupportPattern& other);
  /// Union with the stored pattern of a sparse matrix (values ignored).
  Index unite(const SparseRows& other);

  SupportPattern transposed() const;

 private:
  std::vector<std::vector<Index>> rows_;
  bool include_diagonal_ = false;
};

/// Model hyperparameters shared by the joint and sequential solvers.
struct DsscParams {
  double eta1 = 1.0;   // self-expressive ridge weight, > 0
  double eta2 = 0.1;   // affinity scale / projection regularizer, > 0
  double eta3 = 0.0;   // l1 weight, >= 0
  double rho = 0.5;    // ADMM penalty, > 0
  double tau = 1e-4;   // linearization step, > 0
  Index k = 2;         // cluster count

  void validate() const;
  /// Also checks k against the number of points.
  void validate(Index n) const;
};

// --- core operations ------------------------------------------------------

/// (A + A^T) / 2. Throws on non-square input. Preserves doubly stochastic
/// feasibility at any tolerance.
SparseRows symmetrize(const SparseRows& a);
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Rescales every column to unit Euclidean norm. A zero column is an error
/// naming the offending index.
DataMatrix unit_normalize_columns(const DataMatrix& x);

}  // namespace dssc
