// dssc: doubly stochastic subspace clustering command line tool.
//
// Subcommands: cluster, selfexpr, project, spectral, eval, synth, bench.
// Exit codes: 0 success, 2 validation error, 3 non-convergence, 4 I/O error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dssc/bench.hpp"
#include "dssc/dsproj.hpp"
#include "dssc/io.hpp"
#include "dssc/jdssc.hpp"
#include "dssc/metrics.hpp"
#include "dssc/pipeline.hpp"
#include "dssc/selfexpr.hpp"
#include "dssc/spectral.hpp"
#include "dssc/synth.hpp"

namespace {

using namespace dssc;

spectral::ClusterLabels compact_labels(const std::vector<int>& raw) {
  std::map<int, int> remap;
  std::vector<int> ids;
  ids.reserve(raw.size());
  for (int v : raw) {
    auto [it, inserted] = remap.emplace(v, static_cast<int>(remap.size()));
    ids.push_back(it->second);
  }
  return spectral::ClusterLabels(std::move(ids), static_cast<Index>(remap.size()));
}

Eigen::MatrixXd load_cost_matrix(const std::string& path, const std::string& format) {
  if (format == "triplets") return io::read_sparse_affinity(path).to_dense();
  if (format == "csv") return io::read_matrix(path, io::MatrixFormat::csv, true).values();
  if (format == "bin") return io::read_matrix(path, io::MatrixFormat::bin, false).values();
  throw ValidationError("unknown cost format '" + format + "'");
}

io::MatrixFormat parse_format(const std::string& f) {
  if (f == "csv") return io::MatrixFormat::csv;
  if (f == "bin") return io::MatrixFormat::bin;
  throw ValidationError("unknown matrix format '" + f + "'");
}

struct ClusterArgs {
  std::string input, format = "csv", labels, out, config, preset, trace;
  bool transpose = false;
  std::string method, backend, projection;
  double eta1 = -1, eta2 = -1, eta3 = -1, rho = -1, tau = -1;
  Index k = -1;
  Index support_topk = -1, support_perms = -1;
  std::uint64_t support_seed = 0, seed = 0;
  bool support_seed_set = false, seed_set = false;
  int restarts = -1;
  bool extra_vec = false, forbid_diag = false, tune = false;
};

int run_cluster(const ClusterArgs& args) {
  io::RunConfig config;
  if (!args.config.empty())
    config = io::load_config(args.config, args.preset);
  else if (!args.preset.empty())
    io::apply_preset(config, args.preset);

  if (!args.method.empty()) {
    if (args.method == "jdssc") config.method = io::Method::jdssc;
    else if (args.method == "adssc") config.method = io::Method::adssc;
    else throw ValidationError("unknown method '" + args.method + "'");
  }
  if (!args.backend.empty()) {
    if (args.backend == "lsr_dense") config.backend = io::SelfExprBackend::lsr_dense;
    else if (args.backend == "lsr_woodbury") config.backend = io::SelfExprBackend::lsr_woodbury;
    else if (args.backend == "ensc") config.backend = io::SelfExprBackend::ensc;
    else throw ValidationError("unknown backend '" + args.backend + "'");
  }
  if (!args.projection.empty()) {
    if (args.projection == "auto") config.projection = io::ProjectionMethod::automatic;
    else if (args.projection == "dual") config.projection = io::ProjectionMethod::dual;
    else if (args.projection == "active-set") config.projection = io::ProjectionMethod::active_set;
    else if (args.projection == "altproj") config.projection = io::ProjectionMethod::altproj;
    else throw ValidationError("unknown projection method '" + args.projection + "'");
  }
  if (args.eta1 >= 0) config.params.eta1 = args.eta1;
  if (args.eta2 >= 0) config.params.eta2 = args.eta2;
  if (args.eta3 >= 0) config.params.eta3 = args.eta3;
  if (args.rho >= 0) config.params.rho = args.rho;
  if (args.tau >= 0) config.params.tau = args.tau;
  if (args.k >= 0) config.params.k = args.k;
  if (args.support_topk >= 0) config.support.k_top = args.support_topk;
  if (args.support_perms >= 0) config.support.n_perms = args.support_perms;
  if (args.support_seed_set) config.support.seed = args.support_seed;
  if (args.restarts >= 0) config.spectral.restarts = args.restarts;
  if (args.extra_vec) config.spectral.extra_vec = true;
  if (args.seed_set) config.spectral.seed = args.seed;
  if (args.forbid_diag) config.forbid_diag = true;
  config.paths.input = args.input;
  config.paths.input_format = parse_format(args.format);
  config.paths.transpose = args.transpose;
  config.paths.labels = args.labels;
  config.paths.output_dir = args.out;
  config.validate();

  const DataMatrix x = io::read_matrix(args.input, config.paths.input_format, args.transpose);
  std::optional<spectral::ClusterLabels> truth;
  if (!args.labels.empty()) truth = compact_labels(io::read_labels(args.labels));

  if (args.tune) {
    const double tuned = pipeline::tune_eta2(config, x);
    std::cerr << "tune-eta2: " << io::format_double(config.params.eta2) << " -> "
              << io::format_double(tuned) << "\n";
    config.params.eta2 = tuned;
  }

  pipeline::PipelineResult result;
  if (config.method == io::Method::jdssc && !args.trace.empty()) {
    // traced joint solve, then the rest of the pipeline on its affinity
    std::ofstream tf(args.trace, std::ios::trunc);
    if (!tf) throw IoError("cannot open trace file " + args.trace);
    tf << "iter,objective,res_ya,res_z,res_rows,res_cols\n";
    const DataMatrix normalized = x.unit_normalized() ? x : unit_normalize_columns(x);
    jdssc::JdsscResult joint =
        jdssc::jdssc_solve(normalized, config.params, {}, [&](const jdssc::TracePoint& pt) {
          tf << pt.iter << "," << io::format_double(pt.objective);
          for (double r : pt.residuals) tf << "," << io::format_double(r);
          tf << "\n";
        });
    if (!joint.converged || !joint.affinity)
      throw ConvergenceError("jdssc did not converge; see trace");
    result.resolved = config;
    result.warnings = joint.warnings;
    result.affinity = joint.affinity->entries();
    result.affinity_report = joint.report;
    result.labels =
        spectral::cluster_pipeline(result.affinity, config.params.k, config.spectral.extra_vec,
                                   config.spectral.restarts, config.spectral.seed);
    if (truth) {
      metrics::EvalReport rep;
      rep.acc = metrics::accuracy(result.labels, *truth);
      rep.nmi = metrics::nmi(result.labels, *truth);
      rep.spe = metrics::spe(result.affinity, *truth);
      rep.nnz_per_col = metrics::nnz_per_col(result.affinity);
      result.report = rep;
    }
  } else {
    result = pipeline::run_pipeline(config, x, truth);
  }

  if (!args.out.empty()) pipeline::write_artifacts(args.out, result);

  nlohmann::ordered_json summary;
  summary["n"] = x.num_points();
  summary["k"] = config.params.k;
  summary["method"] = io::to_string(config.method);
  summary["affinity_nnz"] = result.affinity.nnz();
  if (result.report) {
    summary["acc"] = result.report->acc;
    summary["nmi"] = result.report->nmi;
    summary["spe"] = result.report->spe;
    summary["nnz"] = result.report->nnz_per_col;
  }
  std::cout << summary.dump() << "\n";
  if (args.out.empty())
    for (int id : result.labels.ids) std::cerr << id << "\n";
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doubly stochastic subspace clustering"};
  app.require_subcommand(1);

  ClusterArgs cl;
  auto* cluster = app.add_subcommand("cluster", "full pipeline: affinity + spectral clustering");
  cluster->add_option("--input", cl.input, "data matrix file")->required();
  cluster->add_option("--format", cl.format, "csv|bin");
  cluster->add_flag("--transpose", cl.transpose, "treat file rows as dimensions");
  cluster->add_option("--labels", cl.labels, "ground-truth labels (one per line)");
  cluster->add_option("--out", cl.out, "output directory for artifacts");
  cluster->add_option("--config", cl.config, "config file");
  cluster->add_option("--preset", cl.preset, "named parameter preset");
  cluster->add_option("--method", cl.method, "jdssc|adssc");
  cluster->add_option("--backend", cl.backend, "lsr_dense|lsr_woodbury|ensc");
  cluster->add_option("--proj-method", cl.projection, "auto|dual|active-set|altproj");
  cluster->add_option("--k", cl.k, "cluster count");
  cluster->add_option("--eta1", cl.eta1, "self-expressive ridge weight");
  cluster->add_option("--eta2", cl.eta2, "affinity regularization");
  cluster->add_option("--eta3", cl.eta3, "l1 weight");
  cluster->add_option("--rho", cl.rho, "ADMM penalty");
  cluster->add_option("--tau", cl.tau, "ADMM linearization step");
  cluster->add_option("--support-topk", cl.support_topk, "top-k per row in the initial support");
  cluster->add_option("--support-perms", cl.support_perms, "random permutations in the support");
  cluster->add_option("--support-seed", cl.support_seed, "support RNG seed")
      ->each([&cl](const std::string&) { cl.support_seed_set = true; });
  cluster->add_option("--restarts", cl.restarts, "k-means restarts");
  cluster->add_flag("--extra-vec", cl.extra_vec, "use k+1 eigenvectors");
  cluster->add_option("--seed", cl.seed, "spectral RNG seed")
      ->each([&cl](const std::string&) { cl.seed_set = true; });
  cluster->add_flag("--forbid-diag", cl.forbid_diag, "exclude the affinity diagonal");
  cluster->add_flag("--tune-eta2", cl.tune, "bisect eta2 until <= k connected components");
  cluster->add_option("--trace", cl.trace, "per-iteration trace CSV (jdssc)");

  std::string se_input, se_format = "csv", se_out;
  bool se_transpose = false;
  double se_eta1 = 1.0, se_eta3 = 0.0;
  auto* selfexpr_cmd = app.add_subcommand("selfexpr", "self-expressive coefficients only");
  selfexpr_cmd->add_option("--input", se_input)->required();
  selfexpr_cmd->add_option("--format", se_format, "csv|bin");
  selfexpr_cmd->add_flag("--transpose", se_transpose);
  selfexpr_cmd->add_option("--eta1", se_eta1, "ridge weight");
  selfexpr_cmd->add_option("--eta3", se_eta3, "l1 weight (0 = ridge only)");
  selfexpr_cmd->add_option("--out", se_out, "triplet CSV output")->required();

  std::string pr_input, pr_format = "triplets", pr_method = "dual", pr_out;
  double pr_eta2 = 0.1, pr_tol = kDefaultFeasibilityTol;
  Index pr_topk = 15, pr_perms = 3;
  std::uint64_t pr_seed = 0;
  bool pr_forbid = false;
  auto* project_cmd = app.add_subcommand("project", "doubly stochastic projection of a cost");
  project_cmd->add_option("--input", pr_input, "cost matrix")->required();
  project_cmd->add_option("--input-format", pr_format, "triplets|csv|bin");
  project_cmd->add_option("--eta2", pr_eta2, "quadratic regularization")->required();
  project_cmd->add_option("--method", pr_method, "dual|active-set|altproj");
  project_cmd->add_option("--support-topk", pr_topk);
  project_cmd->add_option("--support-perms", pr_perms);
  project_cmd->add_option("--seed", pr_seed, "support RNG seed");
  project_cmd->add_option("--tol", pr_tol, "feasibility tolerance");
  project_cmd->add_flag("--forbid-diag", pr_forbid);
  project_cmd->add_option("--out", pr_out, "triplet CSV output")->required();

  std::string sp_affinity, sp_out, sp_lap = "auto";
  Index sp_k = 2;
  int sp_restarts = 16;
  bool sp_extra = false;
  std::uint64_t sp_seed = 0;
  auto* spectral_cmd = app.add_subcommand("spectral", "spectral clustering of an affinity");
  spectral_cmd->add_option("--affinity", sp_affinity, "triplet CSV affinity")->required();
  spectral_cmd->add_option("--k", sp_k, "cluster count")->required();
  spectral_cmd->add_flag("--extra-vec", sp_extra, "use k+1 eigenvectors");
  spectral_cmd->add_option("--restarts", sp_restarts);
  spectral_cmd->add_option("--seed", sp_seed);
  spectral_cmd->add_option("--laplacian", sp_lap, "auto|unnorm|sym|rw");
  spectral_cmd->add_option("--out", sp_out, "labels output (default stdout)");

  std::string ev_pred, ev_truth, ev_affinity;
  auto* eval_cmd = app.add_subcommand("eval", "score a clustering");
  eval_cmd->add_option("--pred", ev_pred)->required();
  eval_cmd->add_option("--truth", ev_truth)->required();
  eval_cmd->add_option("--affinity", ev_affinity, "triplet CSV for SPE/NNZ");

  synth::SynthSpec spec;
  std::string sy_data, sy_labels, sy_format = "csv";
  auto* synth_cmd = app.add_subcommand("synth", "union-of-subspaces generator");
  synth_cmd->add_option("--subspaces", spec.num_subspaces);
  synth_cmd->add_option("--dim", spec.subspace_dim);
  synth_cmd->add_option("--ambient", spec.ambient_dim);
  synth_cmd->add_option("--points", spec.points_per_subspace, "points per subspace");
  synth_cmd->add_option("--noise", spec.noise_sigma);
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--out-data", sy_data)->required();
  synth_cmd->add_option("--out-labels", sy_labels)->required();
  synth_cmd->add_option("--format", sy_format, "csv|bin");

  bench::BenchOptions bench_opts;
  std::vector<Index> bn_sizes = {500, 1000};
  std::vector<std::string> bn_methods = {"dual", "active-set", "altproj"};
  std::string bn_out;
  auto* bench_cmd = app.add_subcommand("bench", "projection method benchmark");
  bench_cmd->add_option("--sizes", bn_sizes, "problem sizes");
  bench_cmd->add_option("--methods", bn_methods, "dual|active-set|altproj");
  bench_cmd->add_option("--seed", bench_opts.seed);
  bench_cmd->add_option("--repeats", bench_opts.repeats);
  bench_cmd->add_option("--out", bn_out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cluster) return run_cluster(cl);

    if (*selfexpr_cmd) {
      const DataMatrix x = io::read_matrix(se_input, parse_format(se_format), se_transpose);
      const DataMatrix normalized = unit_normalize_columns(x);
      const CoeffMatrix c = se_eta3 > 0.0
                                ? selfexpr::ensc_solve(normalized, se_eta1, se_eta3)
                                : selfexpr::lsr_dense(normalized, se_eta1, /*zero_diag=*/true);
      io::write_sparse_affinity(se_out, c.to_rows());
      std::cout << "{\"n\":" << c.size() << ",\"nnz\":" << c.nnz() << "}\n";
      return 0;
    }

    if (*project_cmd) {
      const Eigen::MatrixXd cost = load_cost_matrix(pr_input, pr_format);
      SparseRows a(cost.rows(), cost.cols());
      if (pr_method == "dual") {
        Eigen::MatrixXd c = cost;
        if (pr_forbid) c.diagonal().setZero();
        dsproj::SolveDualOptions opts;
        opts.grad_tol = std::min(1e-6, pr_tol);
        a = dsproj::project_full_dual(std::move(c), pr_eta2, opts, pr_tol).affinity.entries();
      } else if (pr_method == "active-set") {
        dsproj::DenseCostOracle oracle(cost, pr_forbid);
        dsproj::SupportInitOptions init{pr_topk, pr_perms, pr_seed, pr_forbid};
        dsproj::ActiveSetOptions opts;
        opts.feasibility_tol = pr_tol;
        opts.forbid_diag = pr_forbid;
        a = dsproj::active_set_project(oracle, pr_eta2, dsproj::init_support(oracle, init), opts)
                .affinity.entries();
      } else if (pr_method == "altproj") {
        Eigen::MatrixXd c = cost;
        if (pr_forbid) c.diagonal().setZero();
        const auto res = dsproj::altproj_project(c, pr_eta2, 5000, pr_tol);
        if (!res.converged)
          throw ConvergenceError("altproj did not converge (deviation " +
                                 std::to_string(res.max_dev) + ")");
        a = SparseRows::from_dense(res.a);
      } else {
        throw ValidationError("unknown projection method '" + pr_method + "'");
      }
      io::write_sparse_affinity(pr_out, a);
      const AffinityReport rep = validate_affinity(a, pr_tol);
      std::cout << "{\"n\":" << a.rows() << ",\"nnz\":" << a.nnz()
                << ",\"max_row_dev\":" << rep.max_row_dev
                << ",\"max_col_dev\":" << rep.max_col_dev << "}\n";
      return 0;
    }

    if (*spectral_cmd) {
      const SparseRows a = io::read_sparse_affinity(sp_affinity);
      spectral::LaplacianMode mode;
      if (sp_lap == "auto") mode = spectral::LaplacianMode::automatic;
      else if (sp_lap == "unnorm") mode = spectral::LaplacianMode::unnormalized;
      else if (sp_lap == "sym") mode = spectral::LaplacianMode::symmetric;
      else if (sp_lap == "rw") mode = spectral::LaplacianMode::random_walk;
      else throw ValidationError("unknown laplacian mode '" + sp_lap + "'");
      const SparseRows l = spectral::laplacian(a, mode);
      const spectral::SpectralEmbedding e = spectral::embed(l, sp_k + (sp_extra ? 1 : 0));
      const spectral::ClusterLabels labels =
          spectral::kmeans(e, sp_k, sp_restarts, sp_seed).labels;
      if (sp_out.empty())
        for (int id : labels.ids) std::cout << id << "\n";
      else
        io::write_labels(sp_out, labels.ids);
      return 0;
    }

    if (*eval_cmd) {
      const spectral::ClusterLabels pred = compact_labels(io::read_labels(ev_pred));
      const spectral::ClusterLabels truth = compact_labels(io::read_labels(ev_truth));
      nlohmann::ordered_json rep;
      rep["acc"] = metrics::accuracy(pred, truth);
      rep["nmi"] = metrics::nmi(pred, truth);
      if (!ev_affinity.empty()) {
        const SparseRows a = io::read_sparse_affinity(ev_affinity);
        rep["spe"] = metrics::spe(a, truth);
        rep["nnz"] = metrics::nnz_per_col(a);
      } else {
        rep["spe"] = nullptr;
        rep["nnz"] = nullptr;
      }
      std::cout << rep.dump() << "\n";
      return 0;
    }

    if (*synth_cmd) {
      const synth::SynthResult res = synth::generate(spec);
      io::write_matrix(sy_data, res.data, parse_format(sy_format));
      io::write_labels(sy_labels, res.labels.ids);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }

    if (*bench_cmd) {
      bench_opts.sizes = bn_sizes;
      bench_opts.methods.clear();
      for (const auto& m : bn_methods) {
        if (m == "dual") bench_opts.methods.push_back(io::ProjectionMethod::dual);
        else if (m == "active-set") bench_opts.methods.push_back(io::ProjectionMethod::active_set);
        else if (m == "altproj") bench_opts.methods.push_back(io::ProjectionMethod::altproj);
        else throw ValidationError("unknown bench method '" + m + "'");
      }
      const auto rows = bench::bench_projection(bench_opts);
      const std::string csv = bench::bench_csv(rows);
      if (!bn_out.empty()) {
        std::ofstream f(bn_out, std::ios::trunc);
        if (!f) throw IoError("cannot write " + bn_out);
        f << csv;
      } else {
        std::cout << csv;
      }
      std::cerr << bench::bench_ranking(rows);
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
