#include "dssc/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace dssc {

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion with gamma = s'y / y'y scaling of the seed Hessian.
Eigen::VectorXd lbfgs_direction(const std::deque<Pair>& pairs, const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = -grad;
  if (pairs.empty()) return q;
  std::vector<double> alpha(pairs.size());
  for (size_t idx = pairs.size(); idx-- > 0;) {
    const Pair& p = pairs[idx];
    alpha[idx] = p.rho * p.s.dot(q);
    q -= alpha[idx] * p.y;
  }
  const Pair& last = pairs.back();
  const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
  q *= gamma;
  for (size_t idx = 0; idx < pairs.size(); ++idx) {
    const Pair& p = pairs[idx];
    const double beta = p.rho * p.y.dot(q);
    q += (alpha[idx] - beta) * p.s;
  }
  return q;
}

struct LinePoint {
  double t;
  double f;
  double dphi;  // directional derivative along p
};

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  result.grad.resize(result.x.size());
  result.f = objective(result.x, result.grad);
  result.evaluations = 1;

  std::deque<Pair> pairs;
  Eigen::VectorXd x_new(result.x.size());
  Eigen::VectorXd grad_new(result.x.size());

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    const double gnorm = result.grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= options.grad_inf_tol) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      return result;
    }
    if (result.f < options.divergence_f ||
        result.x.lpNorm<Eigen::Infinity>() > options.divergence_x) {
      result.diverged = true;
      result.message = "objective unbounded below or iterates diverging";
      return result;
    }

    Eigen::VectorXd p = lbfgs_direction(pairs, result.grad);
    double dphi0 = result.grad.dot(p);
    if (!(dphi0 < 0.0)) {  // fall back to steepest descent
      p = -result.grad;
      dphi0 = -result.grad.squaredNorm();
      pairs.clear();
    }

    auto eval = [&](double t) {
      x_new = result.x + t * p;
      const double f = objective(x_new, grad_new);
      ++result.evaluations;
      return LinePoint{t, f, grad_new.dot(p)};
    };

    // strong Wolfe: bracket then zoom. Sufficient decrease is relaxed by an
    // epsilon at the scale of f so steps near the optimum, where the true
    // decrease falls below rounding, are still accepted (the curvature
    // condition does the real work there; the objective is convex).
    const double c1 = options.wolfe_c1;
    const double c2 = options.wolfe_c2;
    const double f0 = result.f;
    const double f_eps = 1e-12 * (1.0 + std::abs(f0));
    auto sufficient = [&](const LinePoint& q) { return q.f <= f0 + c1 * q.t * dphi0 + f_eps; };
    double t = pairs.empty() ? std::min(1.0, 1.0 / (1.0 + result.grad.norm())) : 1.0;
    LinePoint lo{0.0, f0, dphi0};
    LinePoint cur = eval(t);
    bool accepted = false;
    bool in_zoom = false;
    LinePoint hi{0.0, 0.0, 0.0};

    for (int ls = 0; ls < options.max_line_search; ++ls) {
      if (!in_zoom) {
        if (!sufficient(cur) || (ls > 0 && cur.f >= lo.f + f_eps)) {
          hi = cur;
          in_zoom = true;
        } else if (std::abs(cur.dphi) <= -c2 * dphi0) {
          accepted = true;
          break;
        } else if (cur.dphi >= 0.0) {
          hi = lo;
          lo = cur;
          in_zoom = true;
        } else {
          lo = cur;
          cur = eval(std::min(cur.t * 2.5, 1e12));
          continue;
        }
      }
      // zoom step: safeguarded quadratic interpolation through (lo, hi),
      // falling back to bisection when the model is unhelpful
      double mid = 0.5 * (lo.t + hi.t);
      {
        const double delta = hi.t - lo.t;
        const double curv = (hi.f - lo.f - lo.dphi * delta) / (delta * delta);
        if (curv > 0.0) {
          const double cand = lo.t - 0.5 * lo.dphi / curv;
          const double lo_guard = std::min(lo.t, hi.t) + 0.1 * std::abs(delta);
          const double hi_guard = std::max(lo.t, hi.t) - 0.1 * std::abs(delta);
          if (cand >= lo_guard && cand <= hi_guard) mid = cand;
        }
      }
      cur = eval(mid);
      if (!sufficient(cur) || cur.f >= lo.f + f_eps) {
        hi = cur;
      } else {
        if (std::abs(cur.dphi) <= -c2 * dphi0) {
          accepted = true;
          break;
        }
        if (cur.dphi * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, std::abs(lo.t))) {
        cur = lo.t > 0.0 ? eval(lo.t) : cur;
        accepted = lo.t > 0.0 && cur.f <= f0 + f_eps;
        break;
      }
    }

    if (!accepted && !(cur.f <= f0 + f_eps)) {
      // Could not make progress along this direction; if the model was
      // stale retry once from steepest descent, otherwise report.
      if (!pairs.empty()) {
        pairs.clear();
        continue;
      }
      result.message = "line search failed";
      return result;
    }

    Eigen::VectorXd s = x_new - result.x;
    Eigen::VectorXd y = grad_new - result.grad;
    const double sy = s.dot(y);
    result.x.swap(x_new);
    result.grad.swap(grad_new);
    result.f = cur.f;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
  }

  result.iterations = options.max_iterations;
  const double gnorm = result.grad.lpNorm<Eigen::Infinity>();
  result.converged = gnorm <= options.grad_inf_tol;
  result.message = result.converged ? "gradient tolerance reached"
                                    : "iteration cap reached (grad inf-norm " +
                                          std::to_string(gnorm) + ")";
  return result;
}

}  // namespace dssc
