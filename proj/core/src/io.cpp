#include "dssc/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace dssc::io {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view field, const std::string& where) {
  field = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw IoError("bad numeric field '" + std::string(field) + "' at " + where);
  return v;
}

long long parse_int(std::string_view field, const std::string& where) {
  field = trim(field);
  long long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw IoError("bad integer field '" + std::string(field) + "' at " + where);
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

constexpr char kBinMagic[4] = {'D', 'S', 'S', 'C'};

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    std::vector<double> vals;
    vals.reserve(fields.size());
    for (size_t f = 0; f < fields.size(); ++f) {
      const std::string where =
          path + ":" + std::to_string(line_no) + " col " + std::to_string(f + 1);
      const double v = parse_double(fields[f], where);
      if (!std::isfinite(v)) throw IoError("non-finite value at " + where);
      vals.push_back(v);
    }
    if (!rows.empty() && vals.size() != rows.front().size())
      throw IoError(path + ":" + std::to_string(line_no) + ": ragged row (" +
                    std::to_string(vals.size()) + " fields, expected " +
                    std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw IoError(path + ": empty matrix file");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

Eigen::MatrixXd read_bin_matrix(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 12 || std::memcmp(data.data(), kBinMagic, 4) != 0)
    throw IoError(path + ": bad magic (expected DSSC header)");
  auto read_u32 = [&](size_t off) {
    std::uint32_t v = 0;
    std::memcpy(&v, data.data() + off, 4);
    return v;  // little-endian host assumed
  };
  const std::uint32_t rows = read_u32(4);
  const std::uint32_t cols = read_u32(8);
  const size_t need = 12 + static_cast<size_t>(rows) * cols * sizeof(double);
  if (data.size() != need)
    throw IoError(path + ": truncated payload (" + std::to_string(data.size()) + " bytes, want " +
                  std::to_string(need) + ")");
  Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  const char* p = data.data() + 12;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      double v;
      std::memcpy(&v, p, sizeof(double));
      p += sizeof(double);
      m(i, j) = v;
    }
  if (!m.allFinite()) throw IoError(path + ": non-finite entry in binary matrix");
  return m;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

DataMatrix read_matrix(const std::string& path, MatrixFormat format, bool transpose) {
  Eigen::MatrixXd file_matrix =
      format == MatrixFormat::csv ? read_csv_matrix(path) : read_bin_matrix(path);
  Eigen::MatrixXd values;
  if (format == MatrixFormat::csv) {
    // CSV rows are points unless transposed; storage is dims x points.
    values = transpose ? std::move(file_matrix) : Eigen::MatrixXd(file_matrix.transpose());
  } else {
    values = transpose ? Eigen::MatrixXd(file_matrix.transpose()) : std::move(file_matrix);
  }
  return DataMatrix(std::move(values));
}

void write_matrix(const std::string& path, const DataMatrix& x, MatrixFormat format) {
  const Eigen::MatrixXd& v = x.values();
  if (format == MatrixFormat::csv) {
    std::string out;
    for (Index j = 0; j < v.cols(); ++j) {  // one point per row
      for (Index i = 0; i < v.rows(); ++i) {
        if (i) out += ',';
        out += format_double(v(i, j));
      }
      out += '\n';
    }
    write_file(path, out);
    return;
  }
  std::string out;
  out.append(kBinMagic, 4);
  auto put_u32 = [&](std::uint32_t u) { out.append(reinterpret_cast<const char*>(&u), 4); };
  put_u32(static_cast<std::uint32_t>(v.rows()));
  put_u32(static_cast<std::uint32_t>(v.cols()));
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j) {
      const double d = v(i, j);
      out.append(reinterpret_cast<const char*>(&d), sizeof(double));
    }
  write_file(path, out);
}

std::vector<int> read_labels(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<int> labels;
  size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    labels.push_back(
        static_cast<int>(parse_int(line, path + ":" + std::to_string(line_no))));
  }
  if (labels.empty()) throw IoError(path + ": empty label file");
  return labels;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  write_file(path, out);
}

SparseRows read_sparse_affinity(const std::string& path) {
  const std::string text = read_file(path);
  std::optional<Index> n;
  SparseRows a;
  size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!n) {
      if (!line.starts_with("# n="))
        throw IoError(where + ": missing dimension line '# n=<N>'");
      const long long parsed = parse_int(line.substr(4), where);
      if (parsed < 1) throw IoError(where + ": bad dimension " + std::to_string(parsed));
      n = static_cast<Index>(parsed);
      a = SparseRows(*n, *n);
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw IoError(where + ": expected 'i,j,value'");
    const long long i = parse_int(fields[0], where);
    const long long j = parse_int(fields[1], where);
    const double v = parse_double(fields[2], where);
    if (i < 0 || i >= *n || j < 0 || j >= *n)
      throw IoError(where + ": index (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") out of range for n=" + std::to_string(*n));
    if (!std::isfinite(v)) throw IoError(where + ": non-finite value");
    a.insert(static_cast<Index>(i), static_cast<Index>(j), v);
  }
  if (!n) throw IoError(path + ": missing dimension line '# n=<N>'");
  try {
    a.sort_rows();
  } catch (const ValidationError& e) {
    throw IoError(path + ": " + e.what());
  }
  return a;
}

void write_sparse_affinity(const std::string& path, const SparseRows& a) {
  if (!a.is_square()) throw ValidationError("write_sparse_affinity: matrix not square");
  std::string out = "# n=" + std::to_string(a.rows()) + "\n";
  for (Index i = 0; i < a.rows(); ++i)
    for (const auto& e : a.row(i)) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(e.col);
      out += ',';
      out += format_double(e.value);
      out += '\n';
    }
  write_file(path, out);
}

// --- configuration ---------------------------------------------------------

std::string to_string(Method m) { return m == Method::jdssc ? "jdssc" : "adssc"; }

std::string to_string(SelfExprBackend b) {
  switch (b) {
    case SelfExprBackend::lsr_dense: return "lsr_dense";
    case SelfExprBackend::lsr_woodbury: return "lsr_woodbury";
    case SelfExprBackend::ensc: return "ensc";
  }
  return "?";
}

std::string to_string(ProjectionMethod p) {
  switch (p) {
    case ProjectionMethod::automatic: return "auto";
    case ProjectionMethod::dual: return "dual";
    case ProjectionMethod::active_set: return "active-set";
    case ProjectionMethod::altproj: return "altproj";
  }
  return "?";
}

namespace {

Method parse_method(std::string_view v, const std::string& where) {
  if (v == "jdssc") return Method::jdssc;
  if (v == "adssc") return Method::adssc;
  throw ValidationError(where + ": unknown method '" + std::string(v) + "'");
}

SelfExprBackend parse_backend(std::string_view v, const std::string& where) {
  if (v == "lsr_dense") return SelfExprBackend::lsr_dense;
  if (v == "lsr_woodbury") return SelfExprBackend::lsr_woodbury;
  if (v == "ensc") return SelfExprBackend::ensc;
  throw ValidationError(where + ": unknown backend '" + std::string(v) + "'");
}

ProjectionMethod parse_projection(std::string_view v, const std::string& where) {
  if (v == "auto") return ProjectionMethod::automatic;
  if (v == "dual") return ProjectionMethod::dual;
  if (v == "active-set") return ProjectionMethod::active_set;
  if (v == "altproj") return ProjectionMethod::altproj;
  throw ValidationError(where + ": unknown projection method '" + std::string(v) + "'");
}

bool parse_bool(std::string_view v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(where + ": expected boolean, got '" + std::string(v) + "'");
}

struct Preset {
  Method method;
  double eta1, eta2, eta3;
};

const std::map<std::string, Preset>& preset_table() {
  static const std::map<std::string, Preset> table = {
      {"yaleb-jdssc", {Method::jdssc, 0.25, 0.2, 0.0}},
      {"yaleb-adssc", {Method::adssc, 0.5, 0.1, 0.0}},
      {"coil40-jdssc", {Method::jdssc, 25.0, 0.01, 0.1}},
      {"coil40-adssc", {Method::adssc, 25.0, 0.001, 0.0}},
      {"coil40s-jdssc", {Method::jdssc, 0.25, 0.2, 0.0}},
      {"coil40s-adssc", {Method::adssc, 50.0, 0.001, 0.0}},
      {"coil100-jdssc", {Method::jdssc, 25.0, 0.01, 0.1}},
      {"coil100-adssc", {Method::adssc, 50.0, 0.0005, 0.0}},
      {"coil100s-jdssc", {Method::jdssc, 0.25, 0.1, 0.0}},
      {"coil100s-adssc", {Method::adssc, 0.1, 0.025, 0.0}},
      {"umist-jdssc", {Method::jdssc, 1.0, 0.05, 0.0}},
      {"umist-adssc", {Method::adssc, 0.5, 0.05, 0.0}},
      {"umists-jdssc", {Method::jdssc, 0.01, 0.2, 0.0}},
      {"umists-adssc", {Method::adssc, 0.5, 0.01, 0.0}},
      {"orl-jdssc", {Method::jdssc, 1.0, 0.1, 0.1}},
      {"orl-adssc", {Method::adssc, 1.0, 0.05, 0.0}},
      {"mnists-adssc", {Method::adssc, 10.0, 0.001, 0.0}},
      {"emnists-adssc", {Method::adssc, 50.0, 0.001, 0.0}},
  };
  return table;
}

}  // namespace

void apply_preset(RunConfig& config, const std::string& name) {
  const auto& table = preset_table();
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown preset '" + name + "'");
  config.method = it->second.method;
  config.params.eta1 = it->second.eta1;
  config.params.eta2 = it->second.eta2;
  config.params.eta3 = it->second.eta3;
  if (config.method == Method::adssc)
    config.backend = it->second.eta3 > 0.0 ? SelfExprBackend::ensc : SelfExprBackend::lsr_woodbury;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : preset_table()) names.push_back(k);
  return names;
}

void RunConfig::validate() const {
  params.validate();
  if (support.k_top < 0) throw ValidationError("config: support.k_top must be >= 0");
  if (support.n_perms < 0) throw ValidationError("config: support.n_perms must be >= 0");
  if (spectral.restarts < 1) throw ValidationError("config: spectral.restarts must be >= 1");
  if (backend == SelfExprBackend::lsr_woodbury && method == Method::adssc &&
      projection == ProjectionMethod::dual)
    throw ValidationError(
        "config: the lsr_woodbury backend computes coefficients on a support only; "
        "use projection=auto or active-set");
  if (!paths.input.empty() && !std::filesystem::exists(paths.input))
    throw ValidationError("config: input file does not exist: " + paths.input);
  if (!paths.labels.empty() && !std::filesystem::exists(paths.labels))
    throw ValidationError("config: label file does not exist: " + paths.labels);
}

RunConfig parse_config(const std::string& text, const std::string& preset) {
  RunConfig config;
  if (!preset.empty()) apply_preset(config, preset);

  std::string section;
  size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "method" && section != "params" && section != "support" &&
          section != "spectral" && section != "io")
        throw ValidationError(where + ": unknown section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected key=value");
    const std::string key = std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::string qual = section.empty() ? key : section + "." + key;

    if (qual == "method.method") config.method = parse_method(value, where);
    else if (qual == "method.preset") apply_preset(config, std::string(value));
    else if (qual == "method.backend") config.backend = parse_backend(value, where);
    else if (qual == "method.projection") config.projection = parse_projection(value, where);
    else if (qual == "method.forbid_diag") config.forbid_diag = parse_bool(value, where);
    else if (qual == "params.eta1") config.params.eta1 = parse_double(value, where);
    else if (qual == "params.eta2") config.params.eta2 = parse_double(value, where);
    else if (qual == "params.eta3") config.params.eta3 = parse_double(value, where);
    else if (qual == "params.rho") config.params.rho = parse_double(value, where);
    else if (qual == "params.tau") config.params.tau = parse_double(value, where);
    else if (qual == "params.k") config.params.k = static_cast<Index>(parse_int(value, where));
    else if (qual == "support.k_top") config.support.k_top = static_cast<Index>(parse_int(value, where));
    else if (qual == "support.n_perms") config.support.n_perms = static_cast<Index>(parse_int(value, where));
    else if (qual == "support.seed") config.support.seed = static_cast<std::uint64_t>(parse_int(value, where));
    else if (qual == "spectral.restarts") config.spectral.restarts = static_cast<int>(parse_int(value, where));
    else if (qual == "spectral.extra_vec") config.spectral.extra_vec = parse_bool(value, where);
    else if (qual == "spectral.seed") config.spectral.seed = static_cast<std::uint64_t>(parse_int(value, where));
    else if (qual == "io.input") config.paths.input = std::string(value);
    else if (qual == "io.input_format") {
      if (value == "csv") config.paths.input_format = MatrixFormat::csv;
      else if (value == "bin") config.paths.input_format = MatrixFormat::bin;
      else throw ValidationError(where + ": unknown input_format '" + std::string(value) + "'");
    } else if (qual == "io.transpose") config.paths.transpose = parse_bool(value, where);
    else if (qual == "io.labels") config.paths.labels = std::string(value);
    else if (qual == "io.output_dir") config.paths.output_dir = std::string(value);
    else throw ValidationError(where + ": unknown key '" + qual + "'");
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path, const std::string& preset) {
  return parse_config(read_file(path), preset);
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  out += "[method]\n";
  out += "method=" + to_string(config.method) + "\n";
  out += "backend=" + to_string(config.backend) + "\n";
  out += "projection=" + to_string(config.projection) + "\n";
  out += "forbid_diag=" + std::string(config.forbid_diag ? "true" : "false") + "\n";
  out += "[params]\n";
  out += "eta1=" + format_double(config.params.eta1) + "\n";
  out += "eta2=" + format_double(config.params.eta2) + "\n";
  out += "eta3=" + format_double(config.params.eta3) + "\n";
  out += "rho=" + format_double(config.params.rho) + "\n";
  out += "tau=" + format_double(config.params.tau) + "\n";
  out += "k=" + std::to_string(config.params.k) + "\n";
  out += "[support]\n";
  out += "k_top=" + std::to_string(config.support.k_top) + "\n";
  out += "n_perms=" + std::to_string(config.support.n_perms) + "\n";
  out += "seed=" + std::to_string(config.support.seed) + "\n";
  out += "[spectral]\n";
  out += "restarts=" + std::to_string(config.spectral.restarts) + "\n";
  out += "extra_vec=" + std::string(config.spectral.extra_vec ? "true" : "false") + "\n";
  out += "seed=" + std::to_string(config.spectral.seed) + "\n";
  out += "[io]\n";
  if (!config.paths.input.empty()) out += "input=" + config.paths.input + "\n";
  out += "input_format=" +
         std::string(config.paths.input_format == MatrixFormat::csv ? "csv" : "bin") + "\n";
  out += "transpose=" + std::string(config.paths.transpose ? "true" : "false") + "\n";
  if (!config.paths.labels.empty()) out += "labels=" + config.paths.labels + "\n";
  if (!config.paths.output_dir.empty()) out += "output_dir=" + config.paths.output_dir + "\n";
  return out;
}

}  // namespace dssc::io
