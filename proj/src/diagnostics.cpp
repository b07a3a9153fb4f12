#include "gevtrend/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <spdlog/spdlog.h>

#include "gevtrend/optimize.hpp"
#include "gevtrend/random.hpp"

namespace gevtrend {
namespace {

// 1 - a1 z - a2 z^2 has both roots outside the unit circle
bool stable_polynomial(std::span<const double> a) {
  if (a.empty()) return true;
  if (a.size() == 1) return std::abs(a[0]) < 1.0;
  return std::abs(a[1]) < 1.0 && a[0] + a[1] < 1.0 && a[1] - a[0] < 1.0;
}

// Residuals start at t = p; the sum of squares runs over t >= kMaxArmaOrder for every
// order so that candidate likelihoods share one conditioning window.
double css_residuals(std::span<const double> w, int p, int q, std::span<const double> coef, std::vector<double>* out) {
  const std::size_t n = w.size();
  const auto window = static_cast<std::size_t>(kMaxArmaOrder);
  std::vector<double> e(n, 0.0);
  double sse = 0.0;
  for (std::size_t t = static_cast<std::size_t>(p); t < n; ++t) {
    double v = w[t];
    for (int i = 1; i <= p; ++i) v -= coef[i - 1] * w[t - i];
    for (int j = 1; j <= q; ++j) {
      if (t >= static_cast<std::size_t>(j)) v -= coef[p + j - 1] * e[t - j];
    }
    e[t] = v;
    if (t >= window) sse += v * v;
  }
  if (out) out->assign(e.begin() + p, e.end());
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

}  // namespace

ArmaFit fit_arma(std::span<const double> series, int p, int q) {
  if (series.size() < kMinArmaLength) throw std::invalid_argument("fit_arma: series shorter than 50");
  if (p < 0 || q < 0 || p > kMaxArmaOrder || q > kMaxArmaOrder) {
    throw std::invalid_argument("fit_arma: orders must lie in 0..2");
  }
  ArmaFit fit;
  fit.p = p;
  fit.q = q;
  fit.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
  std::vector<double> w(series.size());
  std::transform(series.begin(), series.end(), w.begin(), [&](double x) { return x - fit.mean; });

  const std::size_t k = static_cast<std::size_t>(p + q);
  std::vector<double> coef(k, 0.0);
  if (k > 0) {
    const double scale = std::inner_product(w.begin(), w.end(), w.begin(), 0.0) / static_cast<double>(w.size());
    const Objective sse = [&](std::span<const double> c) {
      return css_residuals(w, p, q, c, nullptr) / (scale > 0.0 ? scale : 1.0);
    };
    const std::vector<double> steps(k, 0.1);
    auto simplex = nelder_mead(sse, coef, steps, {.ftol = 1e-12, .xtol = 1e-8, .max_evaluations = 4000});
    auto polish = bfgs(sse, finite_difference(sse, 1e-7), simplex.x, {.gtol = 1e-8, .max_iterations = 100});
    coef = polish.x;
  }
  fit.ar.assign(coef.begin(), coef.begin() + p);
  fit.ma.assign(coef.begin() + p, coef.end());

  const double sse = css_residuals(w, p, q, coef, &fit.residuals);
  const double n_eff = static_cast<double>(series.size() - kMaxArmaOrder);
  fit.sigma2 = sse / n_eff;
  fit.loglik = fit.sigma2 > 0.0 ? -0.5 * n_eff * (std::log(2.0 * std::numbers::pi * fit.sigma2) + 1.0)
                                : std::numeric_limits<double>::infinity();
  fit.aic = 2.0 * static_cast<double>(p + q + 1) - 2.0 * fit.loglik;

  std::vector<double> ma_as_ar(fit.ma.size());
  std::transform(fit.ma.begin(), fit.ma.end(), ma_as_ar.begin(), [](double th) { return -th; });
  fit.admissible = std::isfinite(fit.aic) && stable_polynomial(fit.ar) && stable_polynomial(ma_as_ar);
  return fit;
}

ArmaFit select_arma(std::span<const double> series) {
  ArmaFit best;
  bool found = false;
  for (int p = 0; p <= kMaxArmaOrder; ++p) {
    for (int q = 0; q <= kMaxArmaOrder; ++q) {
      ArmaFit fit = fit_arma(series, p, q);
      if (!fit.admissible) continue;
      if (!found || fit.aic < best.aic) {
        best = std::move(fit);
        found = true;
      }
    }
  }
  // white noise is always admissible unless the series is constant
  if (!found) best = fit_arma(series, 0, 0);
  return best;
}

Portmanteau box_pierce(std::span<const double> residuals, int lags, int p, int q) {
  if (lags <= p + q) throw std::invalid_argument("box_pierce: lag count must exceed p + q");
  if (residuals.size() <= 2 * static_cast<std::size_t>(lags)) {
    throw std::invalid_argument("box_pierce: series too short for the lag count");
  }
  Portmanteau out;
  out.lags = lags;
  out.dof = lags - p - q;
  const std::size_t n = residuals.size();
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double e : residuals) c0 += (e - mean) * (e - mean);
  if (!(c0 > 0.0)) return out;
  double sum = 0.0;
  for (int k = 1; k <= lags; ++k) {
    double ck = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) ck += (residuals[t] - mean) * (residuals[t - k] - mean);
    const double r = ck / c0;
    sum += r * r;
  }
  out.statistic = static_cast<double>(n) * sum;
  out.pvalue = boost::math::gamma_q(0.5 * out.dof, 0.5 * out.statistic);
  return out;
}

BlockDiagnostic diagnose_block(const ValueBlock& block, int lags) {
  BlockDiagnostic d;
  d.cell = block.cell;
  d.month = block.month;
  d.year = block.year;
  const ArmaFit white = fit_arma(block.values, 0, 0);
  const auto raw = box_pierce(white.residuals, lags);
  d.raw_q = raw.statistic;
  d.raw_pvalue = raw.pvalue;
  const ArmaFit fit = select_arma(block.values);
  d.p = fit.p;
  d.q = fit.q;
  d.aic = fit.aic;
  const auto bp = box_pierce(fit.residuals, lags, fit.p, fit.q);
  d.box_pierce_q = bp.statistic;
  d.bp_pvalue = bp.pvalue;
  return d;
}

ScreenSummary screen_blocks(std::span<const ValueBlock> blocks, int lags, Execution exec, int workers) {
  ScreenSummary summary;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].values.size() >= kMinArmaLength && blocks[i].values.size() > 2 * static_cast<std::size_t>(lags)) {
      usable.push_back(i);
    } else {
      ++summary.skipped_blocks;
    }
  }
  summary.blocks = parallel_map(
      usable.size(), [&](std::size_t i) { return diagnose_block(blocks[usable[i]], lags); }, exec, workers);

  std::vector<CellId> cells;
  std::size_t rejected = 0, raw_rejected = 0;
  for (const auto& d : summary.blocks) {
    cells.push_back(d.cell);
    if (d.bp_pvalue < 0.05) ++rejected;
    if (d.raw_pvalue < 0.05) ++raw_rejected;
  }
  std::sort(cells.begin(), cells.end());
  summary.cells = static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
  if (!summary.blocks.empty()) {
    const double n = static_cast<double>(summary.blocks.size());
    summary.rejection_fraction = static_cast<double>(rejected) / n;
    summary.raw_rejection_fraction = static_cast<double>(raw_rejected) / n;
  }
  return summary;
}

ScreenSummary screen_blocks(std::span<const std::vector<ValueBlock>> per_cell, std::size_t sample_cells,
                            std::uint64_t seed, int lags, Execution exec, int workers) {
  if (sample_cells == 0) throw std::invalid_argument("screen_blocks: sample at least one cell");
  if (sample_cells > per_cell.size()) {
    spdlog::warn("diagnostics: requested {} cells but only {} are available; using all", sample_cells,
                 per_cell.size());
    sample_cells = per_cell.size();
  }
  std::vector<std::size_t> order(per_cell.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, {0x646961ULL});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(sample_cells);
  std::sort(order.begin(), order.end());

  std::vector<ValueBlock> blocks;
  for (std::size_t i : order) blocks.insert(blocks.end(), per_cell[i].begin(), per_cell[i].end());
  auto summary = screen_blocks(blocks, lags, exec, workers);
  summary.cells = sample_cells;
  return summary;
}

}  // namespace gevtrend
