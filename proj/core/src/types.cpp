#include "dssc/types.hpp"

#include <algorithm>
#include <cmath>

namespace dssc {

DataMatrix::DataMatrix(Eigen::MatrixXd values, bool unit_normalized)
    : values_(std::move(values)), unit_normalized_(unit_normalized) {
  if (values_.rows() < 1) throw ValidationError("DataMatrix: need at least one dimension");
  if (values_.cols() < 2) throw ValidationError("DataMatrix: need at least two points");
  if (!values_.allFinite()) throw ValidationError("DataMatrix: non-finite entry");
  if (unit_normalized_) {
    for (Index j = 0; j < values_.cols(); ++j) {
      const double norm = values_.col(j).norm();
      if (norm == 0.0)
        throw ValidationError("DataMatrix: zero column " + std::to_string(j));
      if (std::abs(norm - 1.0) > kUnitNormTol)
        throw ValidationError("DataMatrix: column " + std::to_string(j) +
                              " not unit-normalized (norm " + std::to_string(norm) + ")");
    }
  }
}

CoeffMatrix::CoeffMatrix(Index n, bool zero_diag)
    : columns_(static_cast<size_t>(n)), zero_diag_(zero_diag) {
  if (n < 1) throw ValidationError("CoeffMatrix: empty");
}

Index CoeffMatrix::nnz() const {
  Index total = 0;
  for (const auto& c : columns_) total += static_cast<Index>(c.size());
  return total;
}

void CoeffMatrix::insert(Index i, Index j, double value) {
  if (i < 0 || i >= size() || j < 0 || j >= size())
    throw ValidationError("CoeffMatrix::insert: index out of range");
  if (!std::isfinite(value)) throw ValidationError("CoeffMatrix: non-finite entry");
  if (zero_diag_ && i == j)
    throw ValidationError("CoeffMatrix: diagonal entry rejected (zero_diag)");
  columns_[static_cast<size_t>(j)].push_back({i, value});
}

void CoeffMatrix::sort_columns() {
  for (auto& c : columns_)
    std::sort(c.begin(), c.end(),
              [](const ColEntry& a, const ColEntry& b) { return a.row < b.row; });
}

Eigen::MatrixXd CoeffMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (Index j = 0; j < size(); ++j)
    for (const auto& e : column(j)) m(e.row, j) = e.value;
  return m;
}

SparseRows CoeffMatrix::to_rows(bool absolute) const {
  SparseRows s(size(), size());
  for (Index j = 0; j < size(); ++j)
    for (const auto& e : column(j))
      s.insert(e.row, j, absolute ? std::abs(e.value) : e.value);
  s.sort_rows();
  return s;
}

CoeffMatrix CoeffMatrix::from_dense(const Eigen::MatrixXd& c, bool zero_diag,
                                    double drop_tol) {
  if (c.rows() != c.cols()) throw ValidationError("CoeffMatrix: input not square");
  CoeffMatrix out(c.rows(), zero_diag);
  for (Index j = 0; j < c.cols(); ++j)
    for (Index i = 0; i < c.rows(); ++i) {
      if (zero_diag && i == j) {
        if (c(i, j) != 0.0)
          throw ValidationError("CoeffMatrix: nonzero diagonal at " + std::to_string(i));
        continue;
      }
      if (std::abs(c(i, j)) > drop_tol) out.insert(i, j, c(i, j));
    }
  return out;
}

AffinityReport validate_affinity(const SparseRows& a, double tol) {
  if (!a.is_square()) throw ValidationError("validate_affinity: matrix not square");
  AffinityReport rep;
  const Eigen::VectorXd rs = a.row_sums();
  const Eigen::VectorXd cs = a.col_sums();
  rep.max_row_dev = (rs.array() - 1.0).abs().maxCoeff();
  rep.max_col_dev = (cs.array() - 1.0).abs().maxCoeff();
  rep.min_entry = a.min_value();
  if (a.nnz() < a.rows() * a.cols()) rep.min_entry = std::min(rep.min_entry, 0.0);
  rep.pass = rep.max_row_dev <= tol && rep.max_col_dev <= tol && rep.min_entry >= 0.0;
  return rep;
}

StochasticAffinity::StochasticAffinity(SparseRows entries, double feasibility_tol)
    : entries_(std::move(entries)), feasibility_tol_(feasibility_tol) {
  for (Index i = 0; i < entries_.rows(); ++i)
    for (const auto& e : entries_.row(i))
      if (!std::isfinite(e.value))
        throw ValidationError("StochasticAffinity: non-finite entry");
  report_ = validate_affinity(entries_, feasibility_tol_);
  if (!report_.pass)
    throw ValidationError(
        "StochasticAffinity: not doubly stochastic at tol " + std::to_string(feasibility_tol_) +
        " (row dev " + std::to_string(report_.max_row_dev) + ", col dev " +
        std::to_string(report_.max_col_dev) + ", min entry " + std::to_string(report_.min_entry) +
        ")");
}

AffinityReport validate_affinity(const StochasticAffinity& a, double tol) {
  return validate_affinity(a.entries(), tol);
}

SupportPattern::SupportPattern(Index n, bool include_diagonal)
    : rows_(static_cast<size_t>(n)), include_diagonal_(include_diagonal) {
  if (n < 1) throw ValidationError("SupportPattern: empty");
}

Index SupportPattern::nnz() const {
  Index total = 0;
  for (const auto& r : rows_) total += static_cast<Index>(r.size());
  return total;
}

void SupportPattern::insert(Index i, Index j) {
  if (i < 0 || i >= size() || j < 0 || j >= size())
    throw ValidationError("SupportPattern::insert: index out of range");
  auto& r = rows_[static_cast<size_t>(i)];
  auto it = std::lower_bound(r.begin(), r.end(), j);
  if (it != r.end() && *it == j) return;
  if (i == j) include_diagonal_ = true;
  r.insert(it, j);
}

bool SupportPattern::contains(Index i, Index j) const {
  const auto& r = rows_[static_cast<size_t>(i)];
  return std::binary_search(r.begin(), r.end(), j);
}

SupportPattern SupportPattern::from_rows(std::vector<std::vector<Index>> rows) {
  const Index n = static_cast<Index>(rows.size());
  SupportPattern s(n);
  for (Index i = 0; i < n; ++i) {
    auto& r = rows[static_cast<size_t>(i)];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    if (!r.empty() && (r.front() < 0 || r.back() >= n))
      throw ValidationError("SupportPattern::from_rows: index out of range");
    if (!s.include_diagonal_ && std::binary_search(r.begin(), r.end(), i))
      s.include_diagonal_ = true;
    s.rows_[static_cast<size_t>(i)] = std::move(r);
  }
  return s;
}

Index SupportPattern::unite(const SupportPattern& other) {
  if (other.size() != size()) throw ValidationError("SupportPattern::unite: size mismatch");
  Index added = 0;
  for (Index i = 0; i < size(); ++i) {
    auto& dst = rows_[static_cast<size_t>(i)];
    const auto& src = other.row(i);
    if (src.empty()) continue;
    std::vector<Index> merged;
    merged.reserve(dst.size() + src.size());
    std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(merged));
    added += static_cast<Index>(merged.size() - dst.size());
    dst = std::move(merged);
    if (!include_diagonal_ && contains(i, i)) include_diagonal_ = true;
  }
  return added;
}

Index SupportPattern::unite(const SparseRows& other) {
  if (other.rows() != size() || other.cols() != size())
    throw ValidationError("SupportPattern::unite: size mismatch");
  Index added = 0;
  for (Index i = 0; i < size(); ++i) {
    auto& dst = rows_[static_cast<size_t>(i)];
    const auto& src = other.row(i);
    if (src.empty()) continue;
    std::vector<Index> cols;
    cols.reserve(src.size());
    for (const auto& e : src) cols.push_back(e.col);
    std::vector<Index> merged;
    merged.reserve(dst.size() + cols.size());
    std::set_union(dst.begin(), dst.end(), cols.begin(), cols.end(), std::back_inserter(merged));
    added += static_cast<Index>(merged.size() - dst.size());
    dst = std::move(merged);
    if (!include_diagonal_ && contains(i, i)) include_diagonal_ = true;
  }
  return added;
}

SupportPattern SupportPattern::transposed() const {
  SupportPattern t(size(), include_diagonal_);
  for (Index i = 0; i < size(); ++i)
    for (Index j : row(i)) t.rows_[static_cast<size_t>(j)].push_back(i);
  return t;
}

void DsscParams::validate() const {
  if (!(eta1 > 0.0)) throw ValidationError("params: eta1 must be > 0");
  if (!(eta2 > 0.0)) throw ValidationError("params: eta2 must be > 0");
  if (!(eta3 >= 0.0)) throw ValidationError("params: eta3 must be >= 0");
  if (!(rho > 0.0)) throw ValidationError("params: rho must be > 0");
  if (!(tau > 0.0)) throw ValidationError("params: tau must be > 0");
  if (k < 2) throw ValidationError("params: k must be >= 2");
}

void DsscParams::validate(Index n) const {
  validate();
  if (k > n) throw ValidationError("params: k exceeds number of points");
}

SparseRows symmetrize(const SparseRows& a) {
  if (!a.is_square()) throw ValidationError("symmetrize: matrix not square");
  SparseRows t = a.transposed();
  SparseRows half = SparseRows(a.rows(), a.cols());
  // 0.5*a + 0.5*a^T via one merge
  return half.add_scaled(a, 0.5).add_scaled(t, 0.5);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ValidationError("symmetrize: matrix not square");
  return 0.5 * (a + a.transpose());
}

DataMatrix unit_normalize_columns(const DataMatrix& x) {
  Eigen::MatrixXd v = x.values();
  for (Index j = 0; j < v.cols(); ++j) {
    const double norm = v.col(j).norm();
    if (norm == 0.0)
      throw ValidationError("unit_normalize_columns: zero column " + std::to_string(j));
    v.col(j) /= norm;
  }
  return DataMatrix(std::move(v), true);
}

}  // namespace dssc
