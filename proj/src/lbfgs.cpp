#include "sdmh/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace sdmh {

namespace {

struct Pair {
  VectorXd s;
  VectorXd y;
  double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, VectorXd x0, const LbfgsOptions& options,
                           const std::optional<MatrixXd>& h0_inverse) {
  const Eigen::Index k = x0.size();
  LbfgsResult r;
  r.x = std::move(x0);
  r.g = VectorXd::Zero(k);
  if (k == 0) {
    r.f = objective(r.x, r.g);
    r.evaluations = 1;
    r.converged = true;
    return r;
  }
  r.f = objective(r.x, r.g);
  r.evaluations = 1;
  if (!std::isfinite(r.f) || !r.g.allFinite()) {
    r.message = "objective is not finite at the starting point";
    return r;
  }

  std::deque<Pair> memory;
  double gamma = 1.0;
  VectorXd grad_new(k);
  VectorXd x_new(k);

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    const double gnorm = r.g.lpNorm<Eigen::Infinity>();
    if (gnorm <= options.grad_tol) {
      r.converged = true;
      return r;
    }

    // Two-loop recursion.
    VectorXd q = r.g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * memory[i].s.dot(q);
      q -= alpha[i] * memory[i].y;
    }
    VectorXd d = h0_inverse ? VectorXd(*h0_inverse * q) : VectorXd(gamma * q);
    if (!h0_inverse && memory.empty()) d /= std::max(1.0, r.g.norm());
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double b = memory[i].rho * memory[i].y.dot(d);
      d += memory[i].s * (alpha[i] - b);
    }
    d = -d;
    double slope = r.g.dot(d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      memory.clear();
      d = -r.g / std::max(1.0, r.g.norm());
      slope = r.g.dot(d);
    }

    double step = 1.0;
    bool moved = false;
    double f_new = 0.0;
    for (std::size_t ls = 0; ls < options.max_line_search; ++ls) {
      x_new = r.x + step * d;
      f_new = objective(x_new, grad_new);
      ++r.evaluations;
      if (std::isfinite(f_new) && grad_new.allFinite() &&
          f_new <= r.f + options.armijo * step * slope + 1e-12 * std::abs(r.f)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      r.converged = gnorm <= options.stall_tol * (1.0 + std::abs(r.f));
      r.message = r.converged ? "stalled within tolerance" : "line search failed";
      return r;
    }

    VectorXd s = x_new - r.x;
    VectorXd y = grad_new - r.g;
    const double sy = s.dot(y);
    r.x = x_new;
    r.f = f_new;
    r.g = grad_new;
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      gamma = sy / y.squaredNorm();
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (memory.size() > options.memory) memory.pop_front();
    }
  }
  r.converged = r.g.lpNorm<Eigen::Infinity>() <= options.grad_tol;
  if (!r.converged) r.message = "iteration limit reached";
  return r;
}

}  // namespace sdmh
