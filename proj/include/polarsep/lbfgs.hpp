#pragma once

#include "polarsep/types.hpp"

#include <cmath>
#include <deque>

namespace polarsep {

template <typename Scalar>
struct LbfgsOptionsT {
  int history = 10;
  int max_iter = 100;
  Scalar grad_tol = Scalar(1e-8);  // on ||grad||_inf
  int max_linesearch = 40;
  Scalar armijo = Scalar(1e-4);
  Scalar wolfe = Scalar(0.9);
};

enum class LbfgsStatus { Converged, MaxIter, LineSearchFailed };

// Limited-memory BFGS with the two-loop recursion and a backtracking
// line search enforcing Armijo + weak Wolfe conditions. The objective is
// a callable f(x, grad) -> value that fills grad.
template <typename Scalar, typename Objective>
LbfgsStatus lbfgs_minimize(const Objective& objective, VectorX<Scalar>& x,
                           const LbfgsOptionsT<Scalar>& opts = {}) {
  const Index n = x.size();
  VectorX<Scalar> grad(n), grad_next(n), x_next(n), direction(n);
  Scalar fx = objective(x, grad);

  struct Pair {
    VectorX<Scalar> s, y;
    Scalar rho;
  };
  std::deque<Pair> memory;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (grad.template lpNorm<Eigen::Infinity>() <= opts.grad_tol)
      return LbfgsStatus::Converged;

    // Two-loop recursion for H * grad.
    direction = -grad;
    std::vector<Scalar> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * memory[i].s.dot(direction);
      direction -= alpha[i] * memory[i].y;
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      direction *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const Scalar beta = memory[i].rho * memory[i].y.dot(direction);
      direction += (alpha[i] - beta) * memory[i].s;
    }

    Scalar dg = grad.dot(direction);
    if (!(dg < Scalar(0))) {  // not a descent direction; restart from steepest
      memory.clear();
      direction = -grad;
      dg = grad.dot(direction);
      if (!(dg < Scalar(0))) return LbfgsStatus::Converged;  // grad == 0
    }

    // Weak-Wolfe bisection line search (expand right, bisect inside).
    Scalar step = Scalar(1), lo = Scalar(0), hi = Scalar(-1);
    Scalar fx_next = 0;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_next = x + step * direction;
      fx_next = objective(x_next, grad_next);
      if (!std::isfinite(fx_next) || fx_next > fx + opts.armijo * step * dg) {
        hi = step;
      } else if (grad_next.dot(direction) < opts.wolfe * dg) {
        lo = step;
      } else {
        accepted = true;
        break;
      }
      step = hi > Scalar(0) ? (lo + hi) / Scalar(2) : step * Scalar(2);
    }
    if (!accepted) return LbfgsStatus::LineSearchFailed;

    Pair pair;
    pair.s = x_next - x;
    pair.y = grad_next - grad;
    const Scalar sy = pair.s.dot(pair.y);
    if (sy > Scalar(1e-12) * pair.y.squaredNorm()) {
      pair.rho = Scalar(1) / sy;
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > opts.history) memory.pop_front();
    }
    x.swap(x_next);
    grad.swap(grad_next);
    fx = fx_next;
  }
  return grad.template lpNorm<Eigen::Infinity>() <= opts.grad_tol
             ? LbfgsStatus::Converged
             : LbfgsStatus::MaxIter;
}

}  // namespace polarsep
