#include "dssc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

namespace dssc::spectral {

namespace {

// flavor of the diagonal/off-diagonal scaling; identity_minus is the doubly
// stochastic case where every named variant collapses to I - sym(A)
enum class LapKind { identity_minus, unnormalized, symmetric, random_walk };

SparseRows build_laplacian(const SparseRows& sym, LapKind kind) {
  const Index n = sym.rows();
  const Eigen::VectorXd deg = sym.row_sums();

  if (kind == LapKind::symmetric || kind == LapKind::random_walk) {
    for (Index i = 0; i < n; ++i)
      if (deg[i] == 0.0)
        throw ValidationError("laplacian: zero row " + std::to_string(i) +
                              " cannot be degree-normalized");
  }

  SparseRows l(n, n);
  for (Index i = 0; i < n; ++i) {
    auto& dst = l.row(i);
    const auto& src = sym.row(i);
    bool diag_written = false;
    const double diag_base = kind == LapKind::unnormalized ? deg[i] : 1.0;
    for (const auto& e : src) {
      double off;
      switch (kind) {
        case LapKind::symmetric:
          off = -e.value / std::sqrt(deg[i] * deg[e.col]);
          break;
        case LapKind::random_walk:
          off = -e.value / deg[i];
          break;
        default:
          off = -e.value;
      }
      if (e.col == i) {
        dst.push_back({i, diag_base + off});
        diag_written = true;
      } else {
        if (!diag_written && e.col > i) {
          dst.push_back({i, diag_base});
          diag_written = true;
        }
        dst.push_back({e.col, off});
      }
    }
    if (!diag_written) dst.push_back({i, diag_base});
  }
  return l;
}

// deterministic unit vector for the iterative eigensolver; distinct salts
// give (almost surely) linearly independent directions
Eigen::VectorXd seeded_unit_vector(Index n, std::uint64_t salt = 0) {
  std::mt19937_64 rng(0x5eedULL + salt * 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) {
    // map to (-1, 1); quality is irrelevant, determinism is not
    v[i] = 2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  }
  v.normalize();
  return v;
}

struct EigPairs {
  Eigen::VectorXd values;   // ascending eigenvalues of L
  Eigen::MatrixXd vectors;  // matching columns
};

// Thick-restart Lanczos with full reorthogonalization on B = sigma*I - L,
// returning the k smallest eigenpairs of L. The projected matrix is kept
// tridiagonal (plus the restart border); reorthogonalization corrections
// are at roundoff level and folded into the basis only.
EigPairs lanczos_smallest(const Eigen::SparseMatrix<double>& l, Index k,
                          const EmbedOptions& options) {
  const Index n = l.rows();
  // Gershgorin upper bound for the shift (column sums == row sums here)
  double sigma = 0.0;
  for (Index j = 0; j < n; ++j) {
    double off_abs = 0.0, diag = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(l, j); it; ++it) {
      if (it.row() == it.col())
        diag = it.value();
      else
        off_abs += std::abs(it.value());
    }
    sigma = std::max(sigma, diag + off_abs);
  }
  sigma += 1.0;

  auto apply_b = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return sigma * v - l * v; };

  const Index m = std::min<Index>(n, std::max<Index>(2 * k + 16, 40));
  const Index keep = std::min<Index>(k + 10, m - 2);
  Eigen::MatrixXd basis(n, m);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  Index dim = 1;
  basis.col(0) = seeded_unit_vector(n);
  double r_norm = 0.0;
  Eigen::VectorXd resid;

  // Orthogonalize w against the current basis (twice); reports the self
  // coefficient of column `col` so the caller can record alpha.
  auto orthogonalize = [&](Eigen::VectorXd& w, Index ncols, Index col) {
    double alpha = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = basis.leftCols(ncols).transpose() * w;
      w.noalias() -= basis.leftCols(ncols) * coeff;
      alpha += coeff[col];
    }
    return alpha;
  };

  std::uint64_t salt = 0;
  // fresh direction orthogonal to the current basis, for breakdowns
  auto fresh_direction = [&](Index ncols) {
    for (;;) {
      Eigen::VectorXd w = seeded_unit_vector(n, ++salt);
      orthogonalize(w, ncols, ncols - 1);
      const double norm = w.norm();
      if (norm > 1e-6) return Eigen::VectorXd(w / norm);
    }
  };

  for (int restart = 0; restart < options.max_restarts; ++restart) {
    while (dim <= m) {
      Eigen::VectorXd w = apply_b(basis.col(dim - 1));
      const double alpha = orthogonalize(w, dim, dim - 1);
      t(dim - 1, dim - 1) = alpha;
      const double beta = w.norm();
      if (dim == m) {  // basis full: w is the outgoing residual
        if (beta > 1e-13) {
          r_norm = beta;
          resid = w / beta;
        } else {
          r_norm = 0.0;
          resid = fresh_direction(dim);
        }
        break;
      }
      if (beta < 1e-13) {
        // invariant subspace hit; continue with a fresh orthogonal direction
        basis.col(dim) = fresh_direction(dim);
        // no coupling between the blocks
        ++dim;
        continue;
      }
      basis.col(dim) = w / beta;
      t(dim, dim - 1) = beta;
      t(dim - 1, dim) = beta;
      ++dim;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    if (eig.info() != Eigen::Success)
      throw ConvergenceError("embed: projected eigensolve failed");
    // largest eigenvalues of B first
    std::vector<Index> order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return eig.eigenvalues()[a] > eig.eigenvalues()[b]; });

    bool conv = true;
    for (Index i = 0; i < k; ++i) {
      const double res =
          r_norm * std::abs(eig.eigenvectors()(m - 1, order[static_cast<size_t>(i)]));
      if (res > options.residual_tol) {
        conv = false;
        break;
      }
    }
    const Index take = conv ? k : keep;
    Eigen::MatrixXd ritz(n, take);
    Eigen::VectorXd theta(take);
    for (Index i = 0; i < take; ++i) {
      const Index p = order[static_cast<size_t>(i)];
      ritz.col(i) = basis * eig.eigenvectors().col(p);
      theta[i] = eig.eigenvalues()[p];
    }
    if (conv) {
      EigPairs out;
      out.values.resize(k);
      out.vectors.resize(n, k);
      for (Index i = 0; i < k; ++i) {
        // theta descends over B, so sigma - theta ascends over L
        out.values[i] = sigma - theta[i];
        out.vectors.col(i) = ritz.col(i);
      }
      return out;
    }
    // thick restart: kept Ritz vectors plus the residual direction
    basis.leftCols(keep) = ritz;
    basis.col(keep) = resid;
    t.setZero();
    for (Index i = 0; i < keep; ++i) {
      t(i, i) = theta[i];
      const double border = r_norm * eig.eigenvectors()(m - 1, order[static_cast<size_t>(i)]);
      t(i, keep) = border;
      t(keep, i) = border;
    }
    dim = keep + 1;
  }
  throw ConvergenceError("embed: eigensolver did not converge within restart cap");
}

EigPairs dense_smallest(const SparseRows& l, Index k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(l.to_dense()));
  if (eig.info() != Eigen::Success) throw ConvergenceError("embed: dense eigensolve failed");
  EigPairs out;
  out.values = eig.eigenvalues().head(k);
  out.vectors = eig.eigenvectors().leftCols(k);
  return out;
}

double sq_dist(const Eigen::MatrixXd& rows, Index i, const Eigen::MatrixXd& centroids,
               Index c) {
  return (rows.row(i) - centroids.row(c)).squaredNorm();
}

}  // namespace

SparseRows laplacian(const SparseRows& a, LaplacianMode mode, double tol) {
  if (!a.is_square()) throw ValidationError("laplacian: affinity not square");
  if (a.min_value() < 0.0) throw ValidationError("laplacian: negative affinity entry");
  const SparseRows sym = symmetrize(a);
  if (validate_affinity(sym, tol).pass) return build_laplacian(sym, LapKind::identity_minus);
  switch (mode) {
    case LaplacianMode::unnormalized: return build_laplacian(sym, LapKind::unnormalized);
    case LaplacianMode::random_walk: return build_laplacian(sym, LapKind::random_walk);
    default: return build_laplacian(sym, LapKind::symmetric);
  }
}

SpectralEmbedding embed(const SparseRows& l, Index k, const EmbedOptions& options) {
  const Index n = l.rows();
  if (!l.is_square()) throw ValidationError("embed: matrix not square");
  if (k < 1 || k >= n) throw ValidationError("embed: need 1 <= k < n");

  EigPairs pairs = n <= options.dense_cutoff ? dense_smallest(l, k)
                                             : lanczos_smallest(l.to_eigen(), k, options);

  // enforce the residual contract on whichever path produced the pairs
  const Eigen::SparseMatrix<double> ls = l.to_eigen();
  const Eigen::SparseMatrix<double> lsym =
      Eigen::SparseMatrix<double>(0.5 * (Eigen::SparseMatrix<double>(ls.transpose()) + ls));
  for (Index i = 0; i < k; ++i) {
    const double res =
        (lsym * pairs.vectors.col(i) - pairs.values[i] * pairs.vectors.col(i)).norm();
    if (res > 1e-8)
      throw ConvergenceError("embed: eigenpair " + std::to_string(i) + " residual " +
                             std::to_string(res) + " exceeds 1e-8");
  }

  SpectralEmbedding out;
  out.vectors = pairs.vectors;
  out.eigenvalues = pairs.values;
  for (Index i = 0; i < n; ++i) {
    const double norm = out.vectors.row(i).norm();
    if (norm > 1e-12)
      out.vectors.row(i) /= norm;
    else
      ++out.zero_rows;
  }
  out.row_normalized = true;
  return out;
}

ClusterLabels::ClusterLabels(std::vector<int> ids_in, Index k_in)
    : ids(std::move(ids_in)), k(k_in) {
  if (ids.empty()) throw ValidationError("labels: empty");
  if (k < 1) throw ValidationError("labels: k must be >= 1");
  for (int id : ids)
    if (id < 0 || id >= k)
      throw ValidationError("labels: id " + std::to_string(id) + " outside [0, " +
                            std::to_string(k) + ")");
}

KmeansResult kmeans(const SpectralEmbedding& embedding, Index k, int restarts,
                    std::uint64_t seed) {
  if (restarts < 1) throw ValidationError("kmeans: restarts must be >= 1");
  const Eigen::MatrixXd& rows = embedding.vectors;
  const Index n = rows.rows();
  if (k < 1 || k > n) throw ValidationError("kmeans: need 1 <= k <= n");

  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r) + 1);
    auto uniform = [&]() { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };

    // k-means++ seeding
    Eigen::MatrixXd centroids(k, rows.cols());
    {
      const Index first = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      centroids.row(0) = rows.row(first);
      Eigen::VectorXd d2(n);
      for (Index i = 0; i < n; ++i) d2[i] = sq_dist(rows, i, centroids, 0);
      for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total > 0.0) {
          const double target = uniform() * total;
          double acc = 0.0;
          pick = n - 1;
          for (Index i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= target) {
              pick = i;
              break;
            }
          }
        } else {
          pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        }
        centroids.row(c) = rows.row(pick);
        for (Index i = 0; i < n; ++i)
          d2[i] = std::min(d2[i], sq_dist(rows, i, centroids, c));
      }
    }

    std::vector<int> labels(static_cast<size_t>(n), 0);
    std::vector<Index> counts(static_cast<size_t>(k), 0);
    double inertia = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
      bool changed = false;
      inertia = 0.0;
      std::fill(counts.begin(), counts.end(), Index(0));
      for (Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(rows, i, centroids, 0);
        for (Index c = 1; c < k; ++c) {
          const double d = sq_dist(rows, i, centroids, c);
          if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
          }
        }
        if (labels[static_cast<size_t>(i)] != best) {
          labels[static_cast<size_t>(i)] = best;
          changed = true;
        }
        counts[static_cast<size_t>(best)]++;
        inertia += best_d;
      }
      // recompute centroids; reseed empties from the worst-fit point
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
      for (Index i = 0; i < n; ++i) sums.row(labels[static_cast<size_t>(i)]) += rows.row(i);
      for (Index c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] > 0) {
          centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
        } else {
          Index far = 0;
          double far_d = -1.0;
          for (Index i = 0; i < n; ++i) {
            const double d = sq_dist(rows, i, centroids, labels[static_cast<size_t>(i)]);
            if (d > far_d) {
              far_d = d;
              far = i;
            }
          }
          centroids.row(c) = rows.row(far);
          changed = true;
        }
      }
      if (!changed && iter > 0) break;
    }
    // final assignment pass so inertia matches the reported labels
    inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(rows, i, centroids, 0);
      for (Index c = 1; c < k; ++c) {
        const double d = sq_dist(rows, i, centroids, c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      labels[static_cast<size_t>(i)] = best;
      inertia += best_d;
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }

  // ids in [0, k) even if some clusters are empty
  return {ClusterLabels(std::move(best_labels), k), best_inertia};
}

ClusterLabels cluster_pipeline(const SparseRows& a, Index k, bool extra_vec, int restarts,
                               std::uint64_t seed, const EmbedOptions& options) {
  const SparseRows l = laplacian(a, LaplacianMode::automatic);
  const SpectralEmbedding e = embed(l, k + (extra_vec ? 1 : 0), options);
  return kmeans(e, k, restarts, seed).labels;
}

}  // namespace dssc::spectral
