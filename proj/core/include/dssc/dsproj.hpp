#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "dssc/cost_oracle.hpp"
#include "dssc/types.hpp"

namespace dssc::dsproj {

/// Row/column potentials of the projection dual. Defined only up to the
/// shift (alpha + c*1, beta - c*1); everything derived from them
/// (objective, gradients, recovered primal) is shift-invariant.
struct DualPotentials {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  static DualPotentials zeros(Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
};

struct DualEval;

/// One doubly stochastic projection instance: nonnegative cost entries held
/// either on a restricted working support (sparse rows; the stored pattern
/// IS the support) or as a dense matrix (full support), plus the quadratic
/// regularization weight eta2.
class ProjectionProblem {
 public:
  /// Restricted support, entries taken from a sparse cost matrix. Support
  /// indices absent from the cost pattern raise "missing cost entry".
  static ProjectionProblem from_cost_matrix(const SparseRows& cost, const SupportPattern& s,
                                            double eta2);
  /// Restricted support, entries filled from an oracle (always defined).
  static ProjectionProblem from_oracle(const CostOracle& cost, const SupportPattern& s,
                                       double eta2);
  /// Full support over a dense cost.
  static ProjectionProblem full(Eigen::MatrixXd cost, double eta2);

  Index size() const { return n_; }
  double eta2() const { return eta2_; }
  bool full_support() const { return full_; }
  const SparseRows& cost_rows() const { return cost_; }
  const SparseRows& cost_cols() const { return cost_t_; }
  const Eigen::MatrixXd& dense_cost() const { return dense_; }
  const RowMajorMatrix& dense_cost_rows() const { return dense_rm_; }
  Index support_nnz() const;

 private:
  ProjectionProblem() = default;
  void build_flat();

  Index n_ = 0;
  double eta2_ = 0.0;
  bool full_ = false;
  SparseRows cost_;        // restricted mode
  SparseRows cost_t_;      // transposed view of cost_
  Eigen::MatrixXd dense_;  // full mode, column-major for column sweeps
  RowMajorMatrix dense_rm_;  // row-major twin for row sweeps

  // flat compressed copies of the restricted cost; the evaluation loop is
  // memory-bound, so contiguity matters
  std::vector<Index> row_ptr_, row_col_;
  std::vector<double> row_val_;
  std::vector<Index> col_ptr_, col_row_;
  std::vector<double> col_val_;

  friend void eval_dual_restricted(const ProjectionProblem&, const DualPotentials&, DualEval&,
                                   Eigen::VectorXd&);
};

struct DualEval {
  double objective = 0.0;  // value of the concave dual (to be maximized)
  Eigen::VectorXd grad_alpha;
  Eigen::VectorXd grad_beta;
};

/// Dual objective and gradient at the given potentials. The gradient
/// components are exactly (row sum of the recovered primal) - 1 and
/// (column sum) - 1, evaluated on the working support. O(support size).
DualEval dual_objective_grad(const ProjectionProblem& p, const DualPotentials& pots);

struct SolveDualOptions {
  double grad_tol = 1e-6;   // max row/col sum deviation at convergence
  int max_iterations = 2000;
  int memory = 10;
};

struct SolveDualResult {
  DualPotentials pots;
  double objective = 0.0;
  double grad_inf = 0.0;
  int iterations = 0;
};

/// Maximizes the dual by L-BFGS. Throws ConvergenceError when the iteration
/// cap is hit, or when the potentials diverge (which certifies the support
/// holds no doubly stochastic pattern and must be augmented).
SolveDualResult solve_dual(const ProjectionProblem& p, DualPotentials init,
                           const SolveDualOptions& options = {});

/// Primal recovery on the working support: entries (1/eta2)*[cost - alpha_i
/// - beta_j]_+ for (i, j) in the support; only strictly positive entries are
/// stored. Not necessarily feasible before the dual is solved.
SparseRows recover_primal(const ProjectionProblem& p, const DualPotentials& pots);

/// Unrestricted recovery over all (i, j), enumerated without touching
/// entries whose rectifier cannot activate. forbid_diag removes the
/// diagonal from the feasible set.
SparseRows recover_primal_unrestricted(const CostOracle& cost, double eta2,
                                       const DualPotentials& pots, bool forbid_diag = false);

struct ActiveSetOptions {
  double feasibility_tol = kDefaultFeasibilityTol;
  SolveDualOptions dual;
  int max_outer = 50;  // diagnostic cap only; termination is finite
  bool forbid_diag = false;
};

struct ActiveSetResult {
  StochasticAffinity affinity;
  int outer_iterations = 0;
  long long dual_iterations = 0;
  Index final_support_nnz = 0;
  DualPotentials pots;
};

/// Working-set solver for the unrestricted projection: repeatedly solves
/// the restricted dual, recovers the unrestricted primal, and grows the
/// support by its strictly positive entries until the unrestricted
/// recovery is doubly stochastic — which certifies global optimality.
/// Support growth is strictly monotone, so termination is finite.
ActiveSetResult active_set_project(const CostOracle& cost, double eta2,
                                   const SupportPattern& s0,
                                   const ActiveSetOptions& options = {});

struct SupportInitOptions {
  Index k_top = 15;
  Index n_perms = 3;
  std::uint64_t seed = 0;
  bool forbid_diag = false;
};

/// Union of each row's top-k cost entries and n_perms random permutation
/// matrices; the permutations guarantee the restricted problem is feasible.
/// The diagonal is excluded from the top-k candidates when the cost
/// diagonal is structurally zero. With forbid_diag the permutations are
/// fixed-point free.
SupportPattern init_support(const CostOracle& cost, const SupportInitOptions& options = {});

/// Convenience wrapper: full-support dual solve + primal recovery.
struct FullDualResult {
  StochasticAffinity affinity;
  SolveDualResult dual;
};
FullDualResult project_full_dual(Eigen::MatrixXd cost, double eta2,
                                 const SolveDualOptions& options = {},
                                 double feasibility_tol = kDefaultFeasibilityTol);

struct AltProjResult {
  Eigen::MatrixXd a;
  bool converged = false;
  int iterations = 0;
  double max_dev = 0.0;
};

/// Alternating-projections baseline: alternate the affine projection onto
/// {A1 = 1, A'1 = 1} with clipping at zero, starting from cost/eta2, until
/// row/column sums are within tol of 1 or max_iter is exhausted (returned
/// as non-converged).
AltProjResult altproj_project(const Eigen::MatrixXd& cost, double eta2, int max_iter = 5000,
                              double tol = kDefaultFeasibilityTol);

/// Projection onto the affine set {A1 = 1, A'1 = 1} (closed form).
Eigen::MatrixXd project_affine_sums(const Eigen::MatrixXd& m);

}  // namespace dssc::dsproj
