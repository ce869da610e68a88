#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace dssc {

using Index = std::ptrdiff_t;

struct SparseEntry {
  Index col = 0;
  double value = 0.0;
};

/// Row-major sparse matrix: one sorted (col, value) list per row.
///
/// This is the working representation for affinities, costs and supports:
/// the projection machinery sweeps rows, and a column-major view is built
/// once (via transposed()) when a column sweep is needed.
class SparseRows {
 public:
  SparseRows() = default;
  SparseRows(Index rows, Index cols);

  Index rows() const { return static_cast<Index>(rows_.size()); }
  Index cols() const { return cols_; }
  Index nnz() const;
  Index count_above(double threshold) const;

  std::vector<SparseEntry>& row(Index i) { return rows_[static_cast<size_t>(i)]; }
  const std::vector<SparseEntry>& row(Index i) const { return rows_[static_cast<size_t>(i)]; }

  /// Appends an entry; call sort_rows() once all insertions are done.
  void insert(Index i, Index j, double value);

  /// Sorts each row by column index. Throws ValidationError on duplicates.
  void sort_rows();

  /// Value at (i, j); zero if not stored. O(log row length).
  double coeff(Index i, Index j) const;

  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd col_sums() const;
  double min_value() const;  // min over stored entries; 0 for an empty matrix

  SparseRows transposed() const;
  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

  static SparseRows from_dense(const Eigen::MatrixXd& m, double drop_tol = 0.0);
  static SparseRows identity(Index n);

  /// this + t * other, matching shapes required.
  SparseRows add_scaled(const SparseRows& other, double t) const;

  bool is_square() const { return rows() == cols_; }

 private:
  Index cols_ = 0;
  std::vector<std::vector<SparseEntry>> rows_;
};

}  // namespace dssc
