#include "gevtrend/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gevtrend {
namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double checked(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0, std::span<const double> steps,
                        const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  if (steps.size() != n) throw std::invalid_argument("nelder_mead: step vector size mismatch");
  OptimResult res;

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) {
    values[i] = checked(f(simplex[i]));
    ++res.evaluations;
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
  };

  while (res.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
    }
    const double spread = values[worst] - values[best];
    if (std::isfinite(spread) && spread <= opts.ftol * (std::abs(values[best]) + opts.ftol) && diameter <= opts.xtol) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    point(-1.0, simplex[worst], trial);
    const double fr = checked(f(trial));
    ++res.evaluations;
    if (fr < values[best]) {
      point(-2.0, simplex[worst], trial2);
      const double fe = checked(f(trial2));
      ++res.evaluations;
      if (fe < fr) {
        simplex[worst] = trial2;
        values[worst] = fe;
      } else {
        simplex[worst] = trial;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = trial;
      values[worst] = fr;
      continue;
    }
    // contraction: outside if the reflection improved on the worst vertex
    const bool outside = fr < values[worst];
    point(outside ? -0.5 : 0.5, simplex[worst], trial2);
    const double fc = checked(f(trial2));
    ++res.evaluations;
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      values[i] = checked(f(simplex[i]));
      ++res.evaluations;
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  res.x = simplex[best];
  res.value = values[best];
  return res;
}

OptimResult bfgs(const Objective& f, const Gradient& grad, std::vector<double> x0, const BfgsOptions& opts) {
  const std::size_t n = x0.size();
  OptimResult res;
  res.x = std::move(x0);
  res.value = checked(f(res.x));
  ++res.evaluations;
  if (!std::isfinite(res.value)) return res;

  std::vector<double> g(n), g_new(n), d(n), x_new(n), s(n), y(n), hy(n);
  std::vector<double> h(n * n, 0.0);
  auto reset = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset();
  grad(res.x, g);
  bool fresh = true;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (inf_norm(g) <= opts.gtol) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * g[j];
      d[i] = acc;
    }
    double slope = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
    if (!(slope < 0.0)) {
      reset();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
      fresh = true;
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
      f_new = checked(f(x_new));
      ++res.evaluations;
      if (f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new < res.value)) {
      if (fresh) break;  // no descent even along the steepest direction
      reset();
      fresh = true;
      continue;
    }

    grad(x_new, g_new);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12 * std::sqrt(std::inner_product(s.begin(), s.end(), s.begin(), 0.0) *
                                std::inner_product(y.begin(), y.end(), y.begin(), 0.0))) {
      if (fresh) {
        // scale the initial inverse Hessian before the first update
        const double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = sy / yy;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
      }
      fresh = false;
    }
    res.x = x_new;
    res.value = f_new;
    g.swap(g_new);
  }
  if (!res.converged && inf_norm(g) <= opts.gtol) res.converged = true;
  return res;
}

void central_difference_gradient(const Objective& f, std::span<const double> x, std::span<double> g, double rel_step) {
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
}

Gradient finite_difference(Objective f, double rel_step) {
  return [f = std::move(f), rel_step](std::span<const double> x, std::span<double> g) {
    central_difference_gradient(f, x, g, rel_step);
  };
}

}  // namespace gevtrend
