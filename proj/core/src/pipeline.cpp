#include "dssc/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "dssc/dsproj.hpp"
#include "dssc/jdssc.hpp"
#include "dssc/selfexpr.hpp"

namespace dssc::pipeline {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(name) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string(name) + ": " + e.what());
  }
}

struct CostSetup {
  std::unique_ptr<dsproj::CostOracle> oracle;
  std::optional<selfexpr::WoodburyCache> cache;  // keeps the LSR oracle alive
};

CostSetup build_cost(const io::RunConfig& config, const DataMatrix& x) {
  CostSetup setup;
  switch (config.backend) {
    case io::SelfExprBackend::lsr_dense: {
      const CoeffMatrix c = selfexpr::lsr_dense(x, config.params.eta1, /*zero_diag=*/true);
      setup.oracle = std::make_unique<dsproj::DenseCostOracle>(c.to_dense().cwiseAbs(),
                                                               /*zero_diag=*/true);
      return setup;
    }
    case io::SelfExprBackend::ensc: {
      const CoeffMatrix c = selfexpr::ensc_solve(x, config.params.eta1, config.params.eta3);
      setup.oracle = std::make_unique<dsproj::SparseCostOracle>(c.to_rows(/*absolute=*/true),
                                                                /*zero_diag=*/true);
      return setup;
    }
    case io::SelfExprBackend::lsr_woodbury: {
      setup.cache = selfexpr::build_woodbury_cache(x, config.params.eta1);
      setup.oracle = std::make_unique<selfexpr::LsrCostOracle>(x, *setup.cache);
      return setup;
    }
  }
  throw ValidationError("unknown backend");
}

SparseRows project_cost(const io::RunConfig& config, const dsproj::CostOracle& oracle,
                        double eta2, std::vector<std::string>& warnings) {
  const Index n = oracle.size();
  io::ProjectionMethod method = config.projection;
  if (method == io::ProjectionMethod::automatic) {
    const bool small_dense =
        n <= 3000 && config.backend != io::SelfExprBackend::lsr_woodbury;
    method = small_dense ? io::ProjectionMethod::dual : io::ProjectionMethod::active_set;
  }

  switch (method) {
    case io::ProjectionMethod::dual: {
      Eigen::MatrixXd cost(n, n);
      Eigen::VectorXd row(n);
      for (Index i = 0; i < n; ++i) {
        oracle.dense_row(i, row);
        cost.row(i) = row.transpose();
      }
      if (config.forbid_diag) cost.diagonal().setZero();
      return dsproj::project_full_dual(std::move(cost), eta2).affinity.entries();
    }
    case io::ProjectionMethod::active_set: {
      dsproj::SupportInitOptions init;
      init.k_top = config.support.k_top;
      init.n_perms = config.support.n_perms;
      init.seed = config.support.seed;
      init.forbid_diag = config.forbid_diag;
      const SupportPattern s0 = dsproj::init_support(oracle, init);
      dsproj::ActiveSetOptions opts;
      opts.forbid_diag = config.forbid_diag;
      return dsproj::active_set_project(oracle, eta2, s0, opts).affinity.entries();
    }
    case io::ProjectionMethod::altproj: {
      Eigen::MatrixXd cost(n, n);
      Eigen::VectorXd row(n);
      for (Index i = 0; i < n; ++i) {
        oracle.dense_row(i, row);
        cost.row(i) = row.transpose();
      }
      if (config.forbid_diag) cost.diagonal().setZero();
      const dsproj::AltProjResult res = dsproj::altproj_project(cost, eta2);
      if (!res.converged)
        throw ConvergenceError("altproj did not converge (max deviation " +
                               std::to_string(res.max_dev) + ")");
      warnings.push_back("altproj baseline used for the projection");
      return SparseRows::from_dense(res.a);
    }
    default:
      throw ValidationError("projection method not resolved");
  }
}

}  // namespace

PipelineResult run_pipeline(const io::RunConfig& config, const DataMatrix& x,
                            const std::optional<spectral::ClusterLabels>& truth) {
  config.params.validate(x.num_points());
  if (truth && truth->size() != x.num_points())
    throw ValidationError("pipeline: ground-truth length mismatch");

  PipelineResult result;
  result.resolved = config;

  const DataMatrix data =
      x.unit_normalized() ? x : stage("normalize", [&] { return unit_normalize_columns(x); });

  if (config.method == io::Method::jdssc) {
    jdssc::JdsscResult joint = stage("jdssc", [&] {
      return jdssc::jdssc_solve(data, config.params);
    });
    result.warnings.insert(result.warnings.end(), joint.warnings.begin(), joint.warnings.end());
    if (!joint.converged || !joint.affinity) {
      std::string detail = "jdssc: did not converge";
      for (const auto& w : joint.warnings) detail += "; " + w;
      throw ConvergenceError(detail);
    }
    result.affinity = joint.affinity->entries();
  } else {
    CostSetup cost = stage("selfexpr", [&] { return build_cost(config, data); });
    result.affinity = stage("project", [&] {
      return project_cost(config, *cost.oracle, config.params.eta2, result.warnings);
    });
  }
  result.affinity_report = validate_affinity(result.affinity, kDefaultFeasibilityTol);

  result.labels = stage("spectral", [&] {
    return spectral::cluster_pipeline(result.affinity, config.params.k,
                                      config.spectral.extra_vec, config.spectral.restarts,
                                      config.spectral.seed);
  });

  if (truth) {
    metrics::EvalReport report;
    report.acc = metrics::accuracy(result.labels, *truth);
    report.nmi = metrics::nmi(result.labels, *truth);
    report.spe = metrics::spe(result.affinity, *truth);
    report.nnz_per_col = metrics::nnz_per_col(result.affinity);
    result.report = report;
  }
  return result;
}

void write_artifacts(const std::string& dir, const PipelineResult& result) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);

  io::write_sparse_affinity(dir + "/affinity.csv", result.affinity);
  io::write_labels(dir + "/labels.txt", result.labels.ids);

  nlohmann::ordered_json manifest;
  manifest["config"] = io::dump_config(result.resolved);
  manifest["warnings"] = result.warnings;
  manifest["affinity"] = {{"max_row_dev", result.affinity_report.max_row_dev},
                          {"max_col_dev", result.affinity_report.max_col_dev},
                          {"min_entry", result.affinity_report.min_entry},
                          {"nnz", result.affinity.nnz()}};
  std::ofstream mf(dir + "/manifest.json", std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";

  if (result.report) {
    nlohmann::ordered_json rep;
    rep["acc"] = result.report->acc;
    rep["nmi"] = result.report->nmi;
    rep["spe"] = result.report->spe;
    rep["nnz"] = result.report->nnz_per_col;
    std::ofstream rf(dir + "/report.json", std::ios::trunc);
    if (!rf) throw IoError("cannot write report.json");
    rf << rep.dump(2) << "\n";
  }
}

Index connected_components(const SparseRows& a) {
  if (!a.is_square()) throw ValidationError("connected_components: matrix not square");
  const Index n = a.rows();
  std::vector<Index> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), Index(0));
  std::function<Index(Index)> find = [&](Index v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  auto unite = [&](Index a_, Index b_) {
    const Index ra = find(a_), rb = find(b_);
    if (ra != rb) parent[static_cast<size_t>(ra)] = rb;
  };
  for (Index i = 0; i < n; ++i)
    for (const auto& e : a.row(i))
      if (e.value != 0.0) unite(i, e.col);  // symmetrized implicitly by union
  Index count = 0;
  for (Index i = 0; i < n; ++i)
    if (find(i) == i) ++count;
  return count;
}

double tune_eta2(const io::RunConfig& config, const DataMatrix& x, int bisection_steps) {
  config.params.validate(x.num_points());
  const DataMatrix data = x.unit_normalized() ? x : unit_normalize_columns(x);
  CostSetup cost = build_cost(config, data);
  std::vector<std::string> warnings;

  auto components_at = [&](double eta2) {
    const SparseRows a = project_cost(config, *cost.oracle, eta2, warnings);
    return connected_components(a);
  };

  const Index k = config.params.k;
  double hi = config.params.eta2;
  int grow = 0;
  while (components_at(hi) > k) {
    hi *= 4.0;
    if (++grow > 12) throw ConvergenceError("tune_eta2: no eta2 with <= k components found");
  }
  double lo = hi / 4096.0;
  if (components_at(lo) <= k) return lo;
  for (int it = 0; it < bisection_steps; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (components_at(mid) <= k)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace dssc::pipeline
