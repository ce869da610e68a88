#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace dssc {

/// Evaluates f(x) and writes the gradient into grad (same size as x).
using LbfgsObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 2000;
  double grad_inf_tol = 1e-6;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search = 60;
  // Unbounded-below detection: give up once f or ||x||_inf blow past these.
  double divergence_f = -1e14;
  double divergence_x = 1e13;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;
};

/// Limited-memory BFGS with a strong-Wolfe line search. Minimizes f; stops
/// when the gradient infinity norm drops below grad_inf_tol. The objective
/// may be piecewise smooth (once-differentiable): the search accepts any
/// Wolfe point, so flat segments are tolerated.
LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

}  // namespace dssc
