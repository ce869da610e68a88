#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dssc/spectral.hpp"
#include "dssc/types.hpp"

namespace dssc::metrics {

struct EvalReport {
  double acc = 0.0;
  double nmi = 0.0;
  double spe = 0.0;
  double nnz_per_col = 0.0;
};

/// Minimum-cost perfect assignment on a square cost matrix (potentials
/// method, O(n^3)). Returns the column assigned to each row.
std::vector<Index> hungarian(const Eigen::MatrixXd& cost);

/// Clustering accuracy: best fraction of agreeing points over all matchings
/// of predicted to true cluster ids (optimal assignment on the contingency
/// table).
double accuracy(const spectral::ClusterLabels& pred, const spectral::ClusterLabels& truth);

/// Normalized mutual information with the arithmetic-mean denominator
/// I(p;t) / ((H(p)+H(t))/2). Two single-cluster partitions score 1.
double nmi(const spectral::ClusterLabels& pred, const spectral::ClusterLabels& truth);

/// Subspace-preserving error: mean over columns of the l1 mass fraction
/// assigned to points outside the column's own cluster. Zero columns
/// contribute 0 (counted in zero_column_warnings when provided).
double spe(const SparseRows& a, const spectral::ClusterLabels& truth,
           Index* zero_column_warnings = nullptr);

/// Mean count of entries per column with magnitude above threshold.
double nnz_per_col(const SparseRows& a, double threshold = 1e-12);

}  // namespace dssc::metrics
