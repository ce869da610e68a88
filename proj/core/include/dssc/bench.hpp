#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dssc/io.hpp"
#include "dssc/types.hpp"

namespace dssc::bench {

struct BenchRow {
  std::string method;
  std::string instance;
  Index n = 0;
  double seconds = 0.0;  // median over repeats, after one warmup
  long iterations = 0;
  bool converged = false;
  double max_dev = 0.0;
};

struct BenchOptions {
  std::vector<Index> sizes = {500, 1000};
  std::vector<io::ProjectionMethod> methods = {io::ProjectionMethod::dual,
                                               io::ProjectionMethod::active_set,
                                               io::ProjectionMethod::altproj};
  std::uint64_t seed = 0;
  int repeats = 3;
  long iteration_cap = 5000;
  double tol = kDefaultFeasibilityTol;  // row/col sums within tol of 1
};

/// Times the doubly stochastic projection methods on two instance families
/// per size: a symmetrized Gaussian cost (eta2 = 0.5) and an LSR cost from
/// union-of-subspaces data (eta2 = 0.01). Non-convergence within the
/// iteration cap is reported, not thrown.
std::vector<BenchRow> bench_projection(const BenchOptions& options = {});

std::string bench_csv(const std::vector<BenchRow>& rows);
/// One line per instance with methods ordered fastest first.
std::string bench_ranking(const std::vector<BenchRow>& rows);

}  // namespace dssc::bench
