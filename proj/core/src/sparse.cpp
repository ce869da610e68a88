#include "dssc/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "dssc/types.hpp"

namespace dssc {

SparseRows::SparseRows(Index rows, Index cols) : cols_(cols), rows_(static_cast<size_t>(rows)) {
  if (rows < 0 || cols < 0) throw ValidationError("SparseRows: negative dimension");
}

Index SparseRows::nnz() const {
  Index total = 0;
  for (const auto& r : rows_) total += static_cast<Index>(r.size());
  return total;
}

Index SparseRows::count_above(double threshold) const {
  Index total = 0;
  for (const auto& r : rows_)
    for (const auto& e : r)
      if (std::abs(e.value) > threshold) ++total;
  return total;
}

void SparseRows::insert(Index i, Index j, double value) {
  if (i < 0 || i >= rows() || j < 0 || j >= cols_)
    throw ValidationError("SparseRows::insert: index out of range");
  rows_[static_cast<size_t>(i)].push_back({j, value});
}

void SparseRows::sort_rows() {
  for (size_t i = 0; i < rows_.size(); ++i) {
    auto& r = rows_[i];
    std::sort(r.begin(), r.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.col < b.col; });
    for (size_t t = 1; t < r.size(); ++t) {
      if (r[t].col == r[t - 1].col)
        throw ValidationError("SparseRows: duplicate entry at (" + std::to_string(i) + ", " +
                              std::to_string(r[t].col) + ")");
    }
  }
}

double SparseRows::coeff(Index i, Index j) const {
  const auto& r = rows_[static_cast<size_t>(i)];
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const SparseEntry& e, Index c) { return e.col < c; });
  if (it != r.end() && it->col == j) return it->value;
  return 0.0;
}

Eigen::VectorXd SparseRows::row_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(rows());
  for (Index i = 0; i < rows(); ++i)
    for (const auto& e : row(i)) s[i] += e.value;
  return s;
}

Eigen::VectorXd SparseRows::col_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(cols_);
  for (Index i = 0; i < rows(); ++i)
    for (const auto& e : row(i)) s[e.col] += e.value;
  return s;
}

double SparseRows::min_value() const {
  double m = 0.0;
  bool seen = false;
  for (const auto& r : rows_)
    for (const auto& e : r) {
      if (!seen || e.value < m) m = e.value;
      seen = true;
    }
  return seen ? m : 0.0;
}

SparseRows SparseRows::transposed() const {
  SparseRows t(cols_, rows());
  for (Index i = 0; i < rows(); ++i)
    for (const auto& e : row(i)) t.rows_[static_cast<size_t>(e.col)].push_back({i, e.value});
  // built in row-major scan order, so each transposed row is already sorted
  return t;
}

Eigen::MatrixXd SparseRows::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols_);
  for (Index i = 0; i < rows(); ++i)
    for (const auto& e : row(i)) m(i, e.col) = e.value;
  return m;
}

Eigen::SparseMatrix<double> SparseRows::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nnz()));
  for (Index i = 0; i < rows(); ++i)
    for (const auto& e : row(i))
      trips.emplace_back(static_cast<int>(i), static_cast<int>(e.col), e.value);
  Eigen::SparseMatrix<double> m(rows(), cols_);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SparseRows SparseRows::from_dense(const Eigen::MatrixXd& m, double drop_tol) {
  SparseRows s(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop_tol) s.insert(i, j, m(i, j));
  return s;
}

SparseRows SparseRows::identity(Index n) {
  SparseRows s(n, n);
  for (Index i = 0; i < n; ++i) s.insert(i, i, 1.0);
  return s;
}

SparseRows SparseRows::add_scaled(const SparseRows& other, double t) const {
  if (rows() != other.rows() || cols_ != other.cols())
    throw ValidationError("SparseRows::add_scaled: shape mismatch");
  SparseRows out(rows(), cols_);
  for (Index i = 0; i < rows(); ++i) {
    const auto& a = row(i);
    const auto& b = other.row(i);
    size_t ia = 0, ib = 0;
    auto& dst = out.row(i);
    while (ia < a.size() || ib < b.size()) {
      if (ib == b.size() || (ia < a.size() && a[ia].col < b[ib].col)) {
        dst.push_back(a[ia++]);
      } else if (ia == a.size() || b[ib].col < a[ia].col) {
        dst.push_back({b[ib].col, t * b[ib].value});
        ++ib;
      } else {
        dst.push_back({a[ia].col, a[ia].value + t * b[ib].value});
        ++ia;
        ++ib;
      }
    }
  }
  return out;
}

}  // namespace dssc
