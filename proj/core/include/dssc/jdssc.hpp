#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dssc/types.hpp"

namespace dssc::jdssc {

/// Full iterate of the joint solver. cp/cq are the nonnegative zero-diagonal
/// split of the coefficients, a the affinity, y a relaxed copy of a carrying
/// the row/column sum constraints, z a copy of X*(cp - cq). lambda1/lambda2
/// multiply the column/row sum constraints, big_lambda1 couples y to a and
/// big_lambda2 couples z to the data term.
struct AdmmState {
  Eigen::MatrixXd cp, cq;
  Eigen::MatrixXd a;
  Eigen::MatrixXd y;
  Eigen::MatrixXd z;
  Eigen::VectorXd lambda1, lambda2;
  Eigen::MatrixXd big_lambda1;
  Eigen::MatrixXd big_lambda2;
  long iter = 0;

  // refreshed by every step
  Eigen::MatrixXd xc;  // X * (cp - cq)
  double res_ya = 0.0, res_z = 0.0, res_rows = 0.0, res_cols = 0.0;

  static AdmmState initial(Index d, Index n);
};

/// One pass: sequential linearized proximal steps on cp then cq, exact
/// minimizations for a, y, z (in that order, each seeing the freshest
/// values), then dual ascent on all four multipliers. Throws
/// ConvergenceError when any entry passes the divergence guard (1e12).
/// freeze_affinity pins a (and its multipliers), reducing the iteration to
/// the self-expressive subproblem.
void admm_step(AdmmState& state, const DataMatrix& x, const DsscParams& params,
               bool freeze_affinity = false);

/// Joint model objective:
///   0.5*||X - X(cp - cq)||_F^2 + (eta1/2)*||(cp + cq) - eta2*a||_F^2
///   + eta3 * sum(cp + cq)
/// (the l1 term is the plain entry sum; cp/cq are constrained nonnegative).
double model_objective(const Eigen::MatrixXd& cp, const Eigen::MatrixXd& cq,
                       const Eigen::MatrixXd& a, const DataMatrix& x,
                       const DsscParams& params);

struct StopRule {
  double tol = -1.0;  // < 0 means 1e-5 * sqrt(n)
  long max_iter = 20000;
  double feasibility_tol = kDefaultFeasibilityTol;
};

struct TracePoint {
  long iter = 0;
  double objective = 0.0;
  std::array<double, 4> residuals{};  // ||y-a||, ||z-xc||, row sums, col sums
};
using TraceFn = std::function<void(const TracePoint&)>;

struct JdsscResult {
  Eigen::MatrixXd cp, cq;
  CoeffMatrix c;  // cp - cq
  Eigen::MatrixXd a_raw;
  std::optional<StochasticAffinity> affinity;  // present iff feasible at stop tol
  AffinityReport report;
  bool converged = false;
  long iterations = 0;
  double objective = 0.0;
  std::array<double, 4> residuals{};
  std::vector<std::string> warnings;
};

/// Runs admm_step from the cold start (cp = cq = 0, a = y = I, zero
/// multipliers) until the primal residuals drop below stop.tol and the
/// affinity passes feasibility, or until max_iter. A step size violating
/// tau <= 1/(rho * lambda_max(X'X)) is shrunk with a warning. Never throws
/// on plain non-convergence: the partial result carries diagnostics.
JdsscResult jdssc_solve(const DataMatrix& x, const DsscParams& params,
                        const StopRule& stop = {}, const TraceFn& trace = nullptr);

/// Splits signed coefficients into the (positive part, negative part) pair.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_signed(const Eigen::MatrixXd& c);

}  // namespace dssc::jdssc
