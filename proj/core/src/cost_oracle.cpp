#include "dssc/cost_oracle.hpp"

#include <cmath>

namespace dssc::dsproj {

DenseCostOracle::DenseCostOracle(const Eigen::MatrixXd& cost, bool zero_diag)
    : cost_(cost.cwiseAbs()), zero_diag_(zero_diag) {
  if (cost_.rows() != cost_.cols()) throw ValidationError("cost oracle: matrix not square");
  if (!cost_.allFinite()) throw ValidationError("cost oracle: non-finite entry");
  if (zero_diag_) cost_.diagonal().setZero();
  zero_diag_ = zero_diag_ || cost_.diagonal().isZero(0.0);
  row_max_ = cost_.rowwise().maxCoeff();
  col_max_ = cost_.colwise().maxCoeff().transpose();
}

SparseCostOracle::SparseCostOracle(const SparseRows& cost, bool zero_diag)
    : rows_(cost.rows(), cost.cols()), zero_diag_(zero_diag) {
  if (!cost.is_square()) throw ValidationError("cost oracle: matrix not square");
  bool diag_seen = false;
  for (Index i = 0; i < cost.rows(); ++i)
    for (const auto& e : cost.row(i)) {
      if (!std::isfinite(e.value)) throw ValidationError("cost oracle: non-finite entry");
      if (zero_diag_ && i == e.col) continue;
      if (i == e.col && e.value != 0.0) diag_seen = true;
      rows_.insert(i, e.col, std::abs(e.value));
    }
  rows_.sort_rows();
  zero_diag_ = zero_diag_ || !diag_seen;
  cols_ = rows_.transposed();
  const Index n = rows_.rows();
  row_max_ = Eigen::VectorXd::Zero(n);
  col_max_ = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (const auto& e : rows_.row(i)) {
      row_max_[i] = std::max(row_max_[i], e.value);
      col_max_[e.col] = std::max(col_max_[e.col], e.value);
    }
}

double SparseCostOracle::entry(Index i, Index j) const { return rows_.coeff(i, j); }

void SparseCostOracle::dense_row(Index i, Eigen::VectorXd& out) const {
  out.setZero(size());
  for (const auto& e : rows_.row(i)) out[e.col] = e.value;
}

void SparseCostOracle::dense_col(Index j, Eigen::VectorXd& out) const {
  out.setZero(size());
  for (const auto& e : cols_.row(j)) out[e.col] = e.value;
}

}  // namespace dssc::dsproj
