#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dssc/dsproj.hpp"
#include "dssc/metrics.hpp"
#include "dssc/pipeline.hpp"
#include "dssc/selfexpr.hpp"
#include "dssc/synth.hpp"
#include "oracles.hpp"

using namespace dssc;

TEST_SUITE_BEGIN("pipeline");

namespace {

synth::SynthSpec small_spec(std::uint64_t seed, double noise = 0.0) {
  synth::SynthSpec spec;
  spec.num_subspaces = 5;
  spec.subspace_dim = 3;
  spec.ambient_dim = 9;
  spec.points_per_subspace = 20;
  spec.noise_sigma = noise;
  spec.seed = seed;
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("synth is bit-reproducible and respects the subspace structure") {
  const synth::SynthSpec spec = small_spec(7);
  const synth::SynthResult a = synth::generate(spec);
  const synth::SynthResult b = synth::generate(spec);
  CHECK((a.data.values().array() == b.data.values().array()).all());
  CHECK(a.labels.ids == b.labels.ids);
  CHECK(a.data.num_points() == 100);
  CHECK(a.data.dim() == 9);
  CHECK(a.data.unit_normalized());

  // noiseless points lie in the span of their subspace's sample block
  for (Index s = 0; s < spec.num_subspaces; ++s) {
    Eigen::MatrixXd block(spec.ambient_dim, spec.points_per_subspace);
    for (Index p = 0; p < spec.points_per_subspace; ++p)
      block.col(p) = a.data.values().col(s * spec.points_per_subspace + p);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU);
    Eigen::MatrixXd basis = svd.matrixU().leftCols(spec.subspace_dim);
    for (Index p = 0; p < spec.points_per_subspace; ++p) {
      const Eigen::VectorXd v = block.col(p);
      CHECK((v - basis * (basis.transpose() * v)).norm() < 1e-10);
    }
  }
}

TEST_CASE("synth warns when subspaces are undersampled") {
  synth::SynthSpec spec = small_spec(3);
  spec.points_per_subspace = 2;
  const synth::SynthResult res = synth::generate(spec);
  CHECK(!res.warnings.empty());
}

TEST_CASE("synth validates its spec") {
  synth::SynthSpec spec = small_spec(1);
  spec.subspace_dim = 9;
  CHECK_THROWS_AS(synth::generate(spec), ValidationError);
}

TEST_CASE("sequential pipeline clusters clean synthetic data") {
  const synth::SynthResult data = synth::generate(small_spec(11));
  io::RunConfig config;
  config.method = io::Method::adssc;
  config.backend = io::SelfExprBackend::lsr_dense;
  config.params.eta1 = 1.0;
  config.params.eta2 = 0.05;
  config.params.k = 5;
  config.spectral.restarts = 8;
  const pipeline::PipelineResult res = pipeline::run_pipeline(config, data.data, data.labels);
  REQUIRE(res.report.has_value());
  CHECK(res.report->acc >= 0.99);
  CHECK(res.report->spe <= 0.05);
  CHECK(res.affinity_report.pass);
}

TEST_CASE("woodbury active-set path equals a dense dual solve of the same cost") {
  const synth::SynthResult data = synth::generate(small_spec(13));
  const Index n = data.data.num_points();
  const selfexpr::WoodburyCache cache = selfexpr::build_woodbury_cache(data.data, 1.0);
  const selfexpr::LsrCostOracle oracle(data.data, cache);

  dsproj::ActiveSetOptions opts;
  opts.feasibility_tol = 1e-7;
  opts.dual.grad_tol = 1e-9;
  const auto as_res = dsproj::active_set_project(
      oracle, 0.05, dsproj::init_support(oracle, {15, 3, 9, false}), opts);

  Eigen::MatrixXd cost(n, n);
  Eigen::VectorXd row(n);
  for (Index i = 0; i < n; ++i) {
    oracle.dense_row(i, row);
    cost.row(i) = row.transpose();
  }
  const auto dual_res = dsproj::project_full_dual(cost, 0.05, {1e-9, 4000, 10});
  CHECK((as_res.affinity.entries().to_dense() - dual_res.affinity.entries().to_dense())
            .cwiseAbs()
            .maxCoeff() < 1e-6);
}

TEST_CASE("backend choice moves the pipeline result only slightly") {
  const synth::SynthResult data = synth::generate(small_spec(13));
  io::RunConfig dual_cfg;
  dual_cfg.method = io::Method::adssc;
  dual_cfg.backend = io::SelfExprBackend::lsr_dense;
  dual_cfg.projection = io::ProjectionMethod::dual;
  dual_cfg.params.eta1 = 1.0;
  dual_cfg.params.eta2 = 0.05;
  dual_cfg.params.k = 5;

  io::RunConfig as_cfg = dual_cfg;
  as_cfg.backend = io::SelfExprBackend::lsr_woodbury;
  as_cfg.projection = io::ProjectionMethod::active_set;

  // the diag-corrected and uncorrected ridge coefficients are different
  // models; clustering quality should land in the same place
  const auto dual_res = pipeline::run_pipeline(dual_cfg, data.data, data.labels);
  const auto as_res = pipeline::run_pipeline(as_cfg, data.data, data.labels);
  CHECK(dual_res.report->acc >= 0.9);
  CHECK(as_res.report->acc >= 0.9);
  CHECK(std::abs(dual_res.report->acc - as_res.report->acc) <= 0.05);
}

TEST_CASE("artifacts are written and deterministic") {
  namespace fs = std::filesystem;
  const synth::SynthResult data = synth::generate(small_spec(17));
  io::RunConfig config;
  config.method = io::Method::adssc;
  config.backend = io::SelfExprBackend::lsr_dense;
  config.params.eta1 = 1.0;
  config.params.eta2 = 0.01;
  config.params.k = 5;

  const std::string dir1 = (fs::temp_directory_path() / "dssc_artifacts_1").string();
  const std::string dir2 = (fs::temp_directory_path() / "dssc_artifacts_2").string();
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const auto res1 = pipeline::run_pipeline(config, data.data, data.labels);
  pipeline::write_artifacts(dir1, res1);
  const auto res2 = pipeline::run_pipeline(config, data.data, data.labels);
  pipeline::write_artifacts(dir2, res2);

  for (const char* name : {"affinity.csv", "labels.txt", "report.json", "manifest.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(fs::path(dir1) / name));
    CHECK(read_file((fs::path(dir1) / name).string()) ==
          read_file((fs::path(dir2) / name).string()));
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("connected components of a block support") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  a.topLeftCorner(2, 2).setOnes();
  a.block(2, 2, 2, 2).setOnes();
  a.bottomRightCorner(2, 2).setOnes();
  CHECK(pipeline::connected_components(SparseRows::from_dense(a)) == 3);
  a(0, 5) = 0.5;  // link first and last blocks
  CHECK(pipeline::connected_components(SparseRows::from_dense(a)) == 2);
}

TEST_CASE("tune_eta2 reaches at most k components") {
  const synth::SynthResult data = synth::generate(small_spec(19));
  io::RunConfig config;
  config.method = io::Method::adssc;
  config.backend = io::SelfExprBackend::lsr_dense;
  config.params.eta1 = 1.0;
  config.params.eta2 = 1e-6;  // assignment regime: far too sparse
  config.params.k = 5;
  const double tuned = pipeline::tune_eta2(config, data.data, 10);
  CHECK(tuned > 1e-6);
  config.params.eta2 = tuned;
  const auto res = pipeline::run_pipeline(config, data.data, data.labels);
  CHECK(pipeline::connected_components(res.affinity) <= 5);
}

TEST_CASE("jdssc pipeline end to end on a tiny instance") {
  synth::SynthSpec spec = small_spec(23);
  spec.num_subspaces = 3;
  spec.points_per_subspace = 12;
  const synth::SynthResult data = synth::generate(spec);
  io::RunConfig config;
  config.method = io::Method::jdssc;
  config.params.eta1 = 0.25;
  config.params.eta2 = 1.0;
  config.params.k = 3;
  config.params.tau = 0.02;
  const auto res = pipeline::run_pipeline(config, data.data, data.labels);
  REQUIRE(res.report.has_value());
  CHECK(res.report->acc >= 0.99);
  CHECK(res.affinity_report.pass);
}

TEST_SUITE_END();
