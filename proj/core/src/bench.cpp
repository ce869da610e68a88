#include "dssc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "dssc/dsproj.hpp"
#include "dssc/selfexpr.hpp"
#include "dssc/synth.hpp"

namespace dssc::bench {

namespace {

using Clock = std::chrono::steady_clock;

struct Instance {
  std::string name;
  Index n;
  double eta2;
  Eigen::MatrixXd dense_cost;
};

Eigen::MatrixXd gaussian_cost(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };
  Eigen::MatrixXd g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      // Box-Muller
      double u1 = uniform();
      while (u1 <= 0.0) u1 = uniform();
      g(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
    }
  Eigen::MatrixXd cost = 0.5 * (g.cwiseAbs() + g.cwiseAbs().transpose());
  cost /= cost.maxCoeff();
  return cost;
}

std::vector<Instance> build_instances(const BenchOptions& options) {
  std::vector<Instance> out;
  for (Index n : options.sizes) {
    Instance gauss;
    gauss.name = "gauss-n" + std::to_string(n);
    gauss.n = n;
    gauss.eta2 = 0.5;
    gauss.dense_cost = gaussian_cost(n, options.seed + static_cast<std::uint64_t>(n));
    out.push_back(std::move(gauss));

    synth::SynthSpec spec;
    spec.num_subspaces = 10;
    spec.subspace_dim = 5;
    spec.ambient_dim = 15;
    spec.points_per_subspace = std::max<Index>(1, n / 10);
    spec.noise_sigma = 0.0;
    spec.seed = options.seed + 17;
    const synth::SynthResult data = synth::generate(spec);
    const CoeffMatrix c = selfexpr::lsr_dense(data.data, 1.0, /*zero_diag=*/true);
    Instance lsr;
    lsr.name = "subspace-lsr-n" + std::to_string(data.data.num_points());
    lsr.n = data.data.num_points();
    lsr.eta2 = 0.01;
    lsr.dense_cost = c.to_dense().cwiseAbs();
    out.push_back(std::move(lsr));
  }
  return out;
}

struct RunOutcome {
  long iterations = 0;
  bool converged = false;
  double max_dev = 0.0;
};

RunOutcome run_method(io::ProjectionMethod method, const Instance& inst,
                      const BenchOptions& options) {
  RunOutcome out;
  switch (method) {
    case io::ProjectionMethod::dual: {
      dsproj::SolveDualOptions opts;
      opts.grad_tol = options.tol;
      opts.max_iterations = static_cast<int>(options.iteration_cap);
      try {
        const auto res = dsproj::project_full_dual(inst.dense_cost, inst.eta2, opts);
        out.iterations = res.dual.iterations;
        out.converged = true;
        out.max_dev = res.dual.grad_inf;
      } catch (const ConvergenceError&) {
        out.iterations = options.iteration_cap;
      }
      return out;
    }
    case io::ProjectionMethod::active_set: {
      dsproj::DenseCostOracle oracle(inst.dense_cost, /*zero_diag=*/false);
      dsproj::SupportInitOptions init;
      init.seed = options.seed;
      dsproj::ActiveSetOptions opts;
      opts.feasibility_tol = options.tol;
      opts.dual.grad_tol = 0.25 * options.tol;
      opts.dual.max_iterations = static_cast<int>(options.iteration_cap);
      try {
        const auto res = dsproj::active_set_project(oracle, inst.eta2,
                                                    dsproj::init_support(oracle, init), opts);
        out.iterations = res.dual_iterations;
        out.converged = true;
        out.max_dev = std::max(res.affinity.report().max_row_dev,
                               res.affinity.report().max_col_dev);
      } catch (const ConvergenceError&) {
        out.iterations = options.iteration_cap;
      }
      return out;
    }
    case io::ProjectionMethod::altproj: {
      const auto res = dsproj::altproj_project(inst.dense_cost, inst.eta2,
                                               static_cast<int>(options.iteration_cap),
                                               options.tol);
      out.iterations = res.iterations;
      out.converged = res.converged;
      out.max_dev = res.max_dev;
      return out;
    }
    default:
      throw ValidationError("bench: unsupported method");
  }
}

}  // namespace

std::vector<BenchRow> bench_projection(const BenchOptions& options) {
  const std::vector<Instance> instances = build_instances(options);
  std::vector<BenchRow> rows;
  for (const Instance& inst : instances) {
    for (io::ProjectionMethod method : options.methods) {
      run_method(method, inst, options);  // warmup
      std::vector<double> times;
      RunOutcome last;
      for (int r = 0; r < std::max(1, options.repeats); ++r) {
        const auto start = Clock::now();
        last = run_method(method, inst, options);
        const auto stop = Clock::now();
        times.push_back(std::chrono::duration<double>(stop - start).count());
      }
      std::sort(times.begin(), times.end());
      BenchRow row;
      row.method = io::to_string(method);
      row.instance = inst.name;
      row.n = inst.n;
      row.seconds = times[times.size() / 2];
      row.iterations = last.iterations;
      row.converged = last.converged;
      row.max_dev = last.max_dev;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "method,instance,n,seconds,iterations,converged,max_dev\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.instance + "," + std::to_string(r.n) + "," +
           io::format_double(r.seconds) + "," + std::to_string(r.iterations) + "," +
           (r.converged ? "true" : "false") + "," + io::format_double(r.max_dev) + "\n";
  }
  return out;
}

std::string bench_ranking(const std::vector<BenchRow>& rows) {
  std::vector<std::string> instances;
  for (const auto& r : rows)
    if (std::find(instances.begin(), instances.end(), r.instance) == instances.end())
      instances.push_back(r.instance);
  std::string out;
  for (const auto& inst : instances) {
    std::vector<const BenchRow*> group;
    for (const auto& r : rows)
      if (r.instance == inst) group.push_back(&r);
    std::sort(group.begin(), group.end(), [](const BenchRow* a, const BenchRow* b) {
      if (a->converged != b->converged) return a->converged;
      return a->seconds < b->seconds;
    });
    out += inst + ": ";
    for (size_t i = 0; i < group.size(); ++i) {
      if (i) out += " < ";
      out += group[i]->method;
      if (!group[i]->converged) out += "(NC)";
    }
    out += "\n";
  }
  return out;
}

}  // namespace dssc::bench
