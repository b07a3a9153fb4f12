#include "gevtrend/gof.hpp"

#include <cmath>
#include <numbers>
#include <tuple>

#include "gevtrend/random.hpp"

namespace gevtrend {
namespace {

constexpr double kSeriesTolerance = 1e-12;

}  // namespace

double kolmogorov_pvalue(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  if (lambda < 1.0) {
    // P(K <= lambda) = sqrt(2 pi) / lambda * sum_k exp(-(2k - 1)^2 pi^2 / (8 lambda^2))
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double j = 2.0 * k - 1.0;
      const double term = std::exp(-j * j * pi2 / (8.0 * lambda * lambda));
      sum += term;
      if (term < kSeriesTolerance * sum) break;
    }
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < kSeriesTolerance) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const GevParams& params) {
  if (sample.size() < kMinKsSample) throw std::invalid_argument("ks_test: at least 10 observations are required");
  KsResult r;
  r.n = sample.size();
  r.statistic = ks_statistic(sample, [&](double x) { return gev_cdf(x, params); });
  r.pvalue = kolmogorov_pvalue(std::sqrt(static_cast<double>(r.n)) * r.statistic);
  r.rejected_at_5pct = r.pvalue < 0.05;
  return r;
}

OutSampleResult out_sample_test(std::span<const double> target, std::span<const std::span<const double>> neighbors) {
  OutSampleResult r;
  r.neighbors = neighbors.size();
  if (neighbors.size() < kMinNeighbors) return r;
  if (target.size() < kMinTargetMaxima) {
    r.status = OutSampleStatus::TargetTooShort;
    return r;
  }
  std::vector<double> pooled;
  for (auto nb : neighbors) pooled.insert(pooled.end(), nb.begin(), nb.end());
  try {
    r.pooled_fit = fit_gev(pooled, LocationModel::stationary());
  } catch (const std::invalid_argument&) {
    r.status = OutSampleStatus::FitFailed;
    return r;
  }
  if (!r.pooled_fit.converged) {
    r.status = OutSampleStatus::FitFailed;
    return r;
  }
  r.ks = ks_test(target, r.pooled_fit.params);
  r.status = OutSampleStatus::Tested;
  return r;
}

std::vector<std::vector<std::size_t>> nearest_neighbors(std::span<const CellId> cells) {
  std::vector<std::vector<std::size_t>> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::vector<std::tuple<int, CellId, std::size_t>> candidates;  // squared distance, cell, index
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == i) continue;
      const int dx = cells[j].lon - cells[i].lon;
      const int dy = cells[j].lat - cells[i].lat;
      if (std::abs(dx) > 1 || std::abs(dy) > 1) continue;
      candidates.emplace_back(dx * dx + dy * dy, cells[j], j);
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t k = 0; k < candidates.size() && k < kMaxNeighbors; ++k) out[i].push_back(std::get<2>(candidates[k]));
  }
  return out;
}

OutSampleSweep out_sample_sweep(std::span<const std::vector<double>> maxima,
                                std::span<const std::vector<std::size_t>> neighbors, Execution exec, int workers) {
  if (maxima.size() != neighbors.size()) throw std::invalid_argument("out_sample_sweep: size mismatch");
  OutSampleSweep sweep;
  sweep.results = parallel_map(
      maxima.size(),
      [&](std::size_t i) {
        std::vector<std::span<const double>> nb;
        nb.reserve(neighbors[i].size());
        for (std::size_t j : neighbors[i]) nb.emplace_back(maxima[j]);
        return out_sample_test(maxima[i], nb);
      },
      exec, workers);
  for (const auto& r : sweep.results) {
    if (r.status != OutSampleStatus::Tested) continue;
    ++sweep.tested;
    if (r.ks.rejected_at_5pct) ++sweep.rejections;
  }
  return sweep;
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile_type7: empty input");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile_type7: probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Envelope simulate_envelope(std::span<const GevParams> field, std::span<const std::size_t> sample_sizes,
                           std::span<const std::vector<std::size_t>> neighbors, std::size_t replicates,
                           std::uint64_t seed, Execution exec, int workers) {
  if (replicates < 20) throw std::invalid_argument("simulate_envelope: at least 20 replicates are required");
  if (field.size() != sample_sizes.size() || field.size() != neighbors.size()) {
    throw std::invalid_argument("simulate_envelope: field, sizes and neighbors must align");
  }
  Envelope env;
  env.replicate_counts = parallel_map(
      replicates,
      [&](std::size_t r) {
        Rng rng = make_stream(seed, {r});
        std::vector<std::vector<double>> simulated(field.size());
        for (std::size_t i = 0; i < field.size(); ++i) simulated[i] = gev_sample(sample_sizes[i], field[i], rng);
        return out_sample_sweep(simulated, neighbors, Execution::Serial).rejections;
      },
      exec, workers);
  std::vector<double> counts(env.replicate_counts.begin(), env.replicate_counts.end());
  env.q05 = std::floor(quantile_type7(counts, 0.05));
  env.q95 = std::ceil(quantile_type7(counts, 0.95));
  return env;
}

}  // namespace gevtrend
