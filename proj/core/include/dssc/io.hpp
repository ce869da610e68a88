#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dssc/types.hpp"

namespace dssc::io {

enum class MatrixFormat { csv, bin };

/// Reads a point set. CSV holds one data point per row (no header); the
/// binary format stores the matrix verbatim: magic "DSSC", u32-LE rows,
/// u32-LE cols, row-major f64-LE payload. With transpose set, the file
/// matrix is transposed after loading (CSV rows then act as dimensions).
DataMatrix read_matrix(const std::string& path, MatrixFormat format, bool transpose = false);

/// Writes a point set: CSV as one point per row, bin as the d x n matrix
/// verbatim. Deterministic; CSV uses shortest round-trip decimals.
void write_matrix(const std::string& path, const DataMatrix& x, MatrixFormat format);

std::vector<int> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int>& labels);

/// Triplet CSV: a "# n=<N>" dimension line, then "i,j,value" rows in
/// row-major order with 0-based indices. Duplicates and out-of-range
/// indices are rejected; values round-trip exactly.
SparseRows read_sparse_affinity(const std::string& path);
void write_sparse_affinity(const std::string& path, const SparseRows& a);

enum class Method { jdssc, adssc };
enum class SelfExprBackend { lsr_dense, lsr_woodbury, ensc };
enum class ProjectionMethod { automatic, dual, active_set, altproj };

std::string to_string(Method m);
std::string to_string(SelfExprBackend b);
std::string to_string(ProjectionMethod p);

struct SupportConfig {
  Index k_top = 15;
  Index n_perms = 3;
  std::uint64_t seed = 0;
};

struct SpectralConfig {
  int restarts = 16;
  bool extra_vec = false;
  std::uint64_t seed = 0;
};

struct IoPaths {
  std::string input;
  MatrixFormat input_format = MatrixFormat::csv;
  bool transpose = false;
  std::string labels;      // optional ground truth
  std::string output_dir;  // artifacts land here when non-empty
};

struct RunConfig {
  Method method = Method::adssc;
  DsscParams params;
  SelfExprBackend backend = SelfExprBackend::lsr_woodbury;
  ProjectionMethod projection = ProjectionMethod::automatic;
  bool forbid_diag = false;
  SupportConfig support;
  SpectralConfig spectral;
  IoPaths paths;

  void validate() const;
};

/// Fills a RunConfig from a Table-style named preset (method + eta1/2/3).
/// Throws ValidationError for unknown names.
void apply_preset(RunConfig& config, const std::string& name);
std::vector<std::string> preset_names();

/// Parses a sectioned key=value file ([method], [params], [support],
/// [spectral], [io]). Unknown keys are errors; file paths referenced by the
/// config must exist. An optional preset is applied before the file's own
/// keys, which override it.
RunConfig load_config(const std::string& path, const std::string& preset = "");
RunConfig parse_config(const std::string& text, const std::string& preset = "");
std::string dump_config(const RunConfig& config);

/// Shortest decimal rendering that round-trips the exact double.
std::string format_double(double v);

}  // namespace dssc::io
