#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dssc/io.hpp"
#include "dssc/metrics.hpp"
#include "dssc/spectral.hpp"
#include "dssc/types.hpp"

namespace dssc::pipeline {

struct PipelineResult {
  SparseRows affinity;
  AffinityReport affinity_report;
  spectral::ClusterLabels labels;
  std::optional<metrics::EvalReport> report;  // when ground truth is given
  io::RunConfig resolved;
  std::vector<std::string> warnings;
};

/// End-to-end run: self-expressive solve + doubly stochastic projection
/// (or the joint solver), then spectral clustering. Columns are
/// unit-normalized first. Errors carry a stage tag in their message.
PipelineResult run_pipeline(const io::RunConfig& config, const DataMatrix& x,
                            const std::optional<spectral::ClusterLabels>& truth = {});

/// Writes affinity.csv, labels.txt, report.json (when present) and
/// manifest.json into dir. Deterministic output for a fixed result.
void write_artifacts(const std::string& dir, const PipelineResult& result);

/// Number of connected components of the symmetrized support of a.
Index connected_components(const SparseRows& a);

/// Shrinks/grows eta2 by log-space bisection until the projected affinity
/// has at most k connected components, returning the smallest such eta2
/// found. Runs the configured self-expressive backend once, then bisects
/// over projections only.
double tune_eta2(const io::RunConfig& config, const DataMatrix& x, int bisection_steps = 16);

}  // namespace dssc::pipeline
