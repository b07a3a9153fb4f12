#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gevtrend {

/// Objective to minimize. May return +inf for infeasible points.
using Objective = std::function<double(std::span<const double>)>;
/// Writes the gradient at x into g (same size as x).
using Gradient = std::function<void(std::span<const double> x, std::span<double> g)>;

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double ftol = 1e-10;  // relative spread of simplex values
  double xtol = 1e-7;   // simplex diameter
  int max_evaluations = 4000;
};

/// Derivative-free simplex search. The starting point is a vertex of the initial
/// simplex, so the returned value never exceeds objective(x0).
OptimResult nelder_mead(const Objective& f, std::vector<double> x0, std::span<const double> steps,
                        const NelderMeadOptions& opts = {});

struct BfgsOptions {
  double gtol = 1e-8;  // infinity norm of the gradient
  int max_iterations = 200;
};

/// Quasi-Newton polish with backtracking Armijo line search. Only accepts
/// decreasing steps, so the returned value never exceeds objective(x0).
OptimResult bfgs(const Objective& f, const Gradient& grad, std::vector<double> x0, const BfgsOptions& opts = {});

/// Central-difference gradient with step rel_step * max(|x_i|, 1).
void central_difference_gradient(const Objective& f, std::span<const double> x, std::span<double> g,
                                 double rel_step = 1e-6);

/// Gradient adaptor around central_difference_gradient.
Gradient finite_difference(Objective f, double rel_step = 1e-6);

}  // namespace gevtrend
