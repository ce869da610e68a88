#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dssc/spectral.hpp"
#include "dssc/types.hpp"

namespace dssc::synth {

/// Union-of-subspaces generator settings.
struct SynthSpec {
  Index num_subspaces = 10;
  Index subspace_dim = 5;
  Index ambient_dim = 15;
  Index points_per_subspace = 400;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SynthResult {
  DataMatrix data;
  spectral::ClusterLabels labels;
  std::vector<std::string> warnings;
};

/// Samples an orthonormal basis per subspace (QR of a seeded Gaussian),
/// draws points as basis times unit Gaussian coefficients, adds isotropic
/// noise, and unit-normalizes the columns. Bit-reproducible per seed.
SynthResult generate(const SynthSpec& spec);

}  // namespace dssc::synth
