#include "dssc/synth.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>

namespace dssc::synth {

namespace {

// Box-Muller over mt19937_64 uniforms: identical streams on every platform,
// unlike std::normal_distribution.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0); }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  if (spec.num_subspaces < 1 || spec.subspace_dim < 1 || spec.points_per_subspace < 1)
    throw ValidationError("synth: counts must be positive");
  if (spec.subspace_dim >= spec.ambient_dim)
    throw ValidationError("synth: subspace_dim must be below ambient_dim");
  if (spec.noise_sigma < 0.0) throw ValidationError("synth: noise_sigma must be >= 0");
  const Index n = spec.num_subspaces * spec.points_per_subspace;
  if (n < 2) throw ValidationError("synth: need at least two points");

  std::vector<std::string> warnings;
  if (spec.points_per_subspace < spec.subspace_dim + 1)
    warnings.push_back("points_per_subspace below subspace_dim + 1; subspaces are undersampled");

  NormalSampler normal(spec.seed);
  Eigen::MatrixXd data(spec.ambient_dim, n);
  std::vector<int> ids(static_cast<size_t>(n));

  Index col = 0;
  for (Index s = 0; s < spec.num_subspaces; ++s) {
    Eigen::MatrixXd g(spec.ambient_dim, spec.subspace_dim);
    for (Index j = 0; j < g.cols(); ++j)
      for (Index i = 0; i < g.rows(); ++i) g(i, j) = normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd basis =
        qr.householderQ() * Eigen::MatrixXd::Identity(spec.ambient_dim, spec.subspace_dim);
    for (Index p = 0; p < spec.points_per_subspace; ++p, ++col) {
      Eigen::VectorXd coeffs(spec.subspace_dim);
      for (Index i = 0; i < coeffs.size(); ++i) coeffs[i] = normal();
      Eigen::VectorXd point = basis * coeffs;
      if (spec.noise_sigma > 0.0)
        for (Index i = 0; i < point.size(); ++i) point[i] += spec.noise_sigma * normal();
      data.col(col) = point;
      ids[static_cast<size_t>(col)] = static_cast<int>(s);
    }
  }

  DataMatrix x = unit_normalize_columns(DataMatrix(std::move(data)));
  return {std::move(x), spectral::ClusterLabels(std::move(ids), spec.num_subspaces),
          std::move(warnings)};
}

}  // namespace dssc::synth
