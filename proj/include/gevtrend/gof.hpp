#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gevtrend/fitter.hpp"
#include "gevtrend/gevdist.hpp"
#include "gevtrend/parallel.hpp"
#include "gevtrend/types.hpp"

namespace gevtrend {

inline constexpr std::size_t kMinKsSample = 10;
inline constexpr std::size_t kMinTargetMaxima = 30;
inline constexpr std::size_t kMaxNeighbors = 8;
inline constexpr std::size_t kMinNeighbors = 4;

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
  std::size_t n = 0;
  bool rejected_at_5pct = false;
};

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of sample and cdf,
/// taking both one-sided excursions at every order statistic.
template <class Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Upper tail P(K > lambda) of the asymptotic Kolmogorov distribution.
double kolmogorov_pvalue(double lambda);

/// KS test of sample against a fully specified GEV, using the asymptotic
/// distribution of sqrt(n) D. Throws std::invalid_argument for n < 10.
KsResult ks_test(std::span<const double> sample, const GevParams& params);

enum class OutSampleStatus { Tested, TooFewNeighbors, TargetTooShort, FitFailed };

struct OutSampleResult {
  OutSampleStatus status = OutSampleStatus::TooFewNeighbors;
  KsResult ks;
  GevFit pooled_fit;
  std::size_t neighbors = 0;
};

/// Fits a stationary GEV to the pooled neighbor maxima and KS-tests the target
/// maxima against it. Needs at least kMinNeighbors neighbors and kMinTargetMaxima
/// target values; otherwise the status says why the cell was skipped.
OutSampleResult out_sample_test(std::span<const double> target, std::span<const std::span<const double>> neighbors);

/// For every cell, indices of the nearest other cells within one grid step in each
/// direction (Euclidean distance in degrees), closest first, at most kMaxNeighbors.
std::vector<std::vector<std::size_t>> nearest_neighbors(std::span<const CellId> cells);

struct OutSampleSweep {
  std::vector<OutSampleResult> results;  // one per cell
  std::size_t tested = 0;
  std::size_t rejections = 0;
};

OutSampleSweep out_sample_sweep(std::span<const std::vector<double>> maxima,
                                std::span<const std::vector<std::size_t>> neighbors,
                                Execution exec = Execution::Parallel, int workers = 0);

struct Envelope {
  std::vector<std::size_t> replicate_counts;
  double q05 = 0.0;
  double q95 = 0.0;

  bool contains(std::size_t count) const {
    return static_cast<double>(count) >= q05 && static_cast<double>(count) <= q95;
  }
};

/// Linear-interpolation (type 7) empirical quantile.
double quantile_type7(std::vector<double> values, double prob);

/// Rejection-count envelope: in each of R replicates, draws sample_sizes[i]
/// independent maxima from field[i] at every cell, runs the out-sample procedure
/// over the whole field and counts rejections. q05 / q95 are the type-7 quantiles
/// of the counts, widened outward to integers. Replicate r uses stream (seed, r).
Envelope simulate_envelope(std::span<const GevParams> field, std::span<const std::size_t> sample_sizes,
                           std::span<const std::vector<std::size_t>> neighbors, std::size_t replicates,
                           std::uint64_t seed, Execution exec = Execution::Parallel, int workers = 0);

}  // namespace gevtrend
