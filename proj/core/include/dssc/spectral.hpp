#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dssc/types.hpp"

namespace dssc::spectral {

enum class LaplacianMode { automatic, unnormalized, symmetric, random_walk };

/// Builds a graph Laplacian from a nonnegative affinity. The input is
/// symmetrized first. In automatic mode a doubly stochastic input (within
/// tol) yields I - sym(A) directly — for such inputs all the normalized
/// variants coincide — and anything else falls back to the symmetric
/// normalization. Degree-normalized modes reject zero rows.
SparseRows laplacian(const SparseRows& a, LaplacianMode mode,
                     double tol = kDefaultFeasibilityTol);

struct SpectralEmbedding {
  Eigen::MatrixXd vectors;     // n x k, rows unit-normalized
  Eigen::VectorXd eigenvalues; // ascending
  bool row_normalized = false;
  Index zero_rows = 0;         // rows left at zero during normalization
};

struct EmbedOptions {
  Index dense_cutoff = 2000;   // dense eigensolver at or below this size
  double residual_tol = 1e-9;  // per-pair ||L v - lambda v|| target
  int max_restarts = 400;      // iterative path
};

/// k eigenpairs of a symmetric PSD Laplacian for the smallest eigenvalues,
/// rows of the embedding normalized to unit length (zero rows stay zero).
/// Dense solver up to dense_cutoff, thick-restart Lanczos above it.
SpectralEmbedding embed(const SparseRows& l, Index k, const EmbedOptions& options = {});

/// Cluster assignment vector with ids in [0, k).
struct ClusterLabels {
  std::vector<int> ids;
  Index k = 0;

  ClusterLabels() = default;
  ClusterLabels(std::vector<int> ids_in, Index k_in);
  Index size() const { return static_cast<Index>(ids.size()); }
};

struct KmeansResult {
  ClusterLabels labels;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia. Deterministic given the seed. Empty clusters are reseeded from
/// the point farthest from its centroid.
KmeansResult kmeans(const SpectralEmbedding& embedding, Index k, int restarts,
                    std::uint64_t seed);

/// laplacian (automatic mode) -> embed with k (+1 with extra_vec) vectors
/// -> kmeans.
ClusterLabels cluster_pipeline(const SparseRows& a, Index k, bool extra_vec, int restarts,
                               std::uint64_t seed, const EmbedOptions& options = {});

}  // namespace dssc::spectral
