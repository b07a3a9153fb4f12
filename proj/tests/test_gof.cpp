#include "gevtrend/gof.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace gevtrend {
namespace {

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

// Supremum over a fine grid plus the left and right limits at each sample point.
double brute_force_ks(std::vector<double> sample, const GevParams& p) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  auto ecdf = [&](double x, bool left) {
    const auto it = left ? std::lower_bound(sample.begin(), sample.end(), x)
                         : std::upper_bound(sample.begin(), sample.end(), x);
    return static_cast<double>(it - sample.begin()) / n;
  };
  double d = 0.0;
  for (double x : sample) {
    d = std::max(d, std::abs(ecdf(x, false) - gev_cdf(x, p)));
    d = std::max(d, std::abs(ecdf(x, true) - gev_cdf(x, p)));
  }
  for (double x = sample.front() - 5.0; x < sample.back() + 5.0; x += 1e-3) {
    d = std::max(d, std::abs(ecdf(x, false) - gev_cdf(x, p)));
  }
  return d;
}

// Alternating series summed to a fixed long length.
double kolmogorov_tail_oracle(double lambda) {
  double s = 0.0;
  for (int k = 1; k <= 400; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return s;
}

std::vector<CellId> block(int nlon, int nlat) {
  std::vector<CellId> cells;
  for (int i = 0; i < nlon; ++i) {
    for (int j = 0; j < nlat; ++j) cells.push_back(CellId{-100 + i, 35 + j});
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::size_t index_of(const std::vector<CellId>& cells, CellId c) {
  return static_cast<std::size_t>(std::find(cells.begin(), cells.end(), c) - cells.begin());
}

TEST(KsStatistic, HandComputedUniformExample) {
  const std::vector<double> x{0.9, 0.1, 0.5};
  EXPECT_NEAR(ks_statistic(x, uniform_cdf), 0.9 - 2.0 / 3.0, 1e-15);
}

TEST(KsStatistic, CountsLeftLimitExcursion) {
  // the only large gap is just below the first point: F(0.8) - 0 = 0.8
  const std::vector<double> x{0.8, 0.85, 0.9, 0.95, 0.99};
  EXPECT_NEAR(ks_statistic(x, uniform_cdf), 0.8, 1e-15);
}

TEST(KsStatistic, EmptySampleThrows) {
  const std::vector<double> empty;
  EXPECT_THROW(ks_statistic(empty, uniform_cdf), std::invalid_argument);
}

TEST(KsStatistic, AgreesWithBruteForceSupremum) {
  const GevParams p(2.0, 1.5, 0.2);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = gev_sample(37, GevParams(2.3, 1.4, 0.1), seed);
    EXPECT_NEAR(ks_statistic(x, [&](double v) { return gev_cdf(v, p); }), brute_force_ks(x, p), 1e-3);
  }
}

TEST(KsStatistic, InvariantUnderProbabilityIntegralTransform) {
  const GevParams p(1000.0, 300.0, 0.1);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = gev_sample(37, GevParams(1050.0, 280.0, 0.05), seed);
    std::vector<double> u(x.size());
    std::transform(x.begin(), x.end(), u.begin(), [&](double v) { return gev_cdf(v, p); });
    EXPECT_NEAR(ks_statistic(x, [&](double v) { return gev_cdf(v, p); }), ks_statistic(u, uniform_cdf), 1e-15);
  }
}

TEST(KolmogorovPValue, TabulatedCriticalValues) {
  EXPECT_NEAR(kolmogorov_pvalue(1.22385), 0.10, 1e-5);
  EXPECT_NEAR(kolmogorov_pvalue(1.35810), 0.05, 1e-5);
  EXPECT_NEAR(kolmogorov_pvalue(1.62762), 0.01, 1e-5);
}

TEST(KolmogorovPValue, MatchesLongSeriesOnBothBranches) {
  for (double lambda = 0.5; lambda <= 3.0; lambda += 0.05) {
    EXPECT_NEAR(kolmogorov_pvalue(lambda), kolmogorov_tail_oracle(lambda), 1e-12) << "lambda=" << lambda;
  }
}

TEST(KolmogorovPValue, LimitsAndMonotonicity) {
  EXPECT_EQ(kolmogorov_pvalue(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_pvalue(0.1), 1.0, 1e-12);
  EXPECT_LT(kolmogorov_pvalue(6.0), 1e-30);
  double prev = 1.0;
  for (double lambda = 0.2; lambda <= 4.0; lambda += 0.01) {
    const double p = kolmogorov_pvalue(lambda);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(KsTest, RequiresTenObservations) {
  const auto x = gev_sample(9, GevParams(0.0, 1.0, 0.0), 1);
  EXPECT_THROW(ks_test(x, GevParams(0.0, 1.0, 0.0)), std::invalid_argument);
}

TEST(KsTest, NominalRejectionRateWithKnownParameters) {
  const GevParams p(1000.0, 300.0, 0.1);
  int rejected = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) rejected += ks_test(gev_sample(37, p, 100 + r), p).rejected_at_5pct;
  const double rate = static_cast<double>(rejected) / reps;
  // the asymptotic law is slightly conservative at n = 37
  EXPECT_GT(rate, 0.025);
  EXPECT_LT(rate, 0.065);
}

TEST(KsTest, ReportsFields) {
  const GevParams p(0.0, 1.0, 0.0);
  const auto x = gev_sample(37, p, 2);
  const auto r = ks_test(x, p);
  EXPECT_EQ(r.n, 37u);
  EXPECT_NEAR(r.pvalue, kolmogorov_pvalue(std::sqrt(37.0) * r.statistic), 1e-15);
  EXPECT_EQ(r.rejected_at_5pct, r.pvalue < 0.05);
}

TEST(NearestNeighbors, InteriorEdgeAndCorner) {
  const auto cells = block(5, 5);
  const auto nb = nearest_neighbors(cells);
  const auto centre = index_of(cells, CellId{-98, 37});
  ASSERT_EQ(nb[centre].size(), 8u);
  for (std::size_t k = 0; k < 4; ++k) {
    const CellId c = cells[nb[centre][k]];
    EXPECT_EQ(std::abs(c.lon + 98) + std::abs(c.lat - 37), 1) << "orthogonal neighbors come first";
  }
  EXPECT_EQ(nb[index_of(cells, CellId{-100, 37})].size(), 5u);
  EXPECT_EQ(nb[index_of(cells, CellId{-100, 35})].size(), 3u);
}

TEST(NearestNeighbors, SkipsMissingCells) {
  auto cells = block(3, 3);
  cells.erase(cells.begin() + static_cast<long>(index_of(cells, CellId{-99, 36})));
  const auto nb = nearest_neighbors(cells);
  for (const auto& list : nb) {
    for (std::size_t j : list) EXPECT_LT(j, cells.size());
  }
  EXPECT_EQ(nb[index_of(cells, CellId{-100, 35})].size(), 2u);
}

TEST(NearestNeighbors, OrderIsDeterministicAmongTies) {
  const auto cells = block(3, 3);
  const auto nb = nearest_neighbors(cells);
  const auto& list = nb[index_of(cells, CellId{-99, 36})];
  std::vector<CellId> got;
  for (std::size_t j : list) got.push_back(cells[j]);
  const std::vector<CellId> expected{{-100, 36}, {-99, 35}, {-99, 37}, {-98, 36},
                                     {-100, 35}, {-100, 37}, {-98, 35}, {-98, 37}};
  EXPECT_EQ(got, expected);
}

TEST(OutSampleTest, SkipsWithTooFewNeighbors) {
  const auto target = gev_sample(37, GevParams(0.0, 1.0, 0.0), 1);
  const auto a = gev_sample(37, GevParams(0.0, 1.0, 0.0), 2);
  const std::vector<std::span<const double>> nb{a, a, a};
  const auto r = out_sample_test(target, nb);
  EXPECT_EQ(r.status, OutSampleStatus::TooFewNeighbors);
  EXPECT_EQ(r.neighbors, 3u);
}

TEST(OutSampleTest, SkipsShortTarget) {
  const auto target = gev_sample(29, GevParams(0.0, 1.0, 0.0), 1);
  const auto a = gev_sample(37, GevParams(0.0, 1.0, 0.0), 2);
  const std::vector<std::span<const double>> nb{a, a, a, a};
  EXPECT_EQ(out_sample_test(target, nb).status, OutSampleStatus::TargetTooShort);
}

TEST(OutSampleTest, ConstantNeighborsReportFitFailure) {
  const auto target = gev_sample(37, GevParams(0.0, 1.0, 0.0), 1);
  const std::vector<double> flat(37, 2.0);
  const std::vector<std::span<const double>> nb{flat, flat, flat, flat};
  EXPECT_EQ(out_sample_test(target, nb).status, OutSampleStatus::FitFailed);
}

TEST(OutSampleTest, CopiedNeighborsReduceToInSampleTest) {
  const auto target = gev_sample(37, GevParams(1000.0, 300.0, 0.1), 5);
  const std::vector<std::span<const double>> nb(8, std::span<const double>(target));
  const auto r = out_sample_test(target, nb);
  ASSERT_EQ(r.status, OutSampleStatus::Tested);
  std::vector<double> pooled;
  for (int i = 0; i < 8; ++i) pooled.insert(pooled.end(), target.begin(), target.end());
  const auto fit = fit_gev(pooled, LocationModel::stationary());
  EXPECT_EQ(r.ks.statistic, ks_test(target, fit.params).statistic);
  // the pooled likelihood is eight times the target's, so the optimum is the same
  const auto own = fit_gev(target, LocationModel::stationary());
  EXPECT_NEAR(r.ks.statistic, ks_test(target, own.params).statistic, 1e-4);
}

TEST(OutSampleTest, ShiftedTargetIsRejected) {
  const GevParams base(1000.0, 300.0, 0.1);
  const GevParams shifted(1000.0 + 5.0 * 300.0, 300.0, 0.1);
  int rejected = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto target = gev_sample(37, shifted, 1000 + r);
    std::vector<std::vector<double>> nbs;
    for (std::uint64_t j = 0; j < 8; ++j) nbs.push_back(gev_sample(37, base, 5000 + 8 * r + j));
    const std::vector<std::span<const double>> nb(nbs.begin(), nbs.end());
    rejected += out_sample_test(target, nb).ks.rejected_at_5pct;
  }
  EXPECT_GE(rejected, 99);
}

TEST(OutSampleSweep, CountsTestedAndRejected) {
  const auto cells = block(4, 4);
  const auto nb = nearest_neighbors(cells);
  std::vector<std::vector<double>> maxima;
  for (std::size_t i = 0; i < cells.size(); ++i) maxima.push_back(gev_sample(37, GevParams(0.0, 1.0, 0.0), i + 1));
  const auto sweep = out_sample_sweep(maxima, nb, Execution::Serial);
  EXPECT_EQ(sweep.results.size(), 16u);
  EXPECT_EQ(sweep.tested, 12u);  // four corners have three neighbors
  std::size_t rejected = 0;
  for (const auto& r : sweep.results) rejected += r.status == OutSampleStatus::Tested && r.ks.rejected_at_5pct;
  EXPECT_EQ(sweep.rejections, rejected);
  EXPECT_THROW(out_sample_sweep(maxima, std::span(nb).first(3)), std::invalid_argument);
}

TEST(QuantileType7, MatchesLinearInterpolationDefinition) {
  std::vector<double> v{10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
  EXPECT_DOUBLE_EQ(quantile_type7(v, 0.05), 1.45);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 0.95), 9.55);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 1.0), 10.0);
  EXPECT_THROW(quantile_type7({}, 0.5), std::invalid_argument);
  EXPECT_THROW(quantile_type7(v, 1.5), std::invalid_argument);
}

class EnvelopeTest : public ::testing::Test {
 protected:
  std::vector<CellId> cells = block(5, 5);
  std::vector<std::vector<std::size_t>> nb = nearest_neighbors(cells);
  std::vector<GevParams> field = std::vector<GevParams>(25, GevParams(1000.0, 300.0, 0.1));
  std::vector<std::size_t> sizes = std::vector<std::size_t>(25, 37);
};

TEST_F(EnvelopeTest, RequiresTwentyReplicates) {
  EXPECT_THROW(simulate_envelope(field, sizes, nb, 19, 1), std::invalid_argument);
  EXPECT_THROW(simulate_envelope(field, std::span(sizes).first(3), nb, 20, 1), std::invalid_argument);
}

TEST_F(EnvelopeTest, QuantilesAreOrderedIntegersInRange) {
  const auto env = simulate_envelope(field, sizes, nb, 40, 3);
  EXPECT_EQ(env.replicate_counts.size(), 40u);
  EXPECT_LE(env.q05, env.q95);
  EXPECT_EQ(env.q05, std::floor(env.q05));
  EXPECT_EQ(env.q95, std::floor(env.q95));
  EXPECT_GE(env.q05, 0.0);
  EXPECT_LE(env.q95, 25.0);
  std::vector<double> counts(env.replicate_counts.begin(), env.replicate_counts.end());
  EXPECT_LE(env.q05, quantile_type7(counts, 0.05));
  EXPECT_GE(env.q95, quantile_type7(counts, 0.95));
}

TEST_F(EnvelopeTest, SerialAndParallelAgree) {
  const auto a = simulate_envelope(field, sizes, nb, 20, 11, Execution::Serial);
  const auto b = simulate_envelope(field, sizes, nb, 20, 11, Execution::Parallel, 3);
  EXPECT_EQ(a.replicate_counts, b.replicate_counts);
  EXPECT_EQ(a.q05, b.q05);
  EXPECT_EQ(a.q95, b.q95);
}

TEST_F(EnvelopeTest, ShortAndLongRunsOverlap) {
  const auto a = simulate_envelope(field, sizes, nb, 20, 21);
  const auto b = simulate_envelope(field, sizes, nb, 100, 22);
  EXPECT_LE(a.q05, b.q95);
  EXPECT_LE(b.q05, a.q95);
}

TEST_F(EnvelopeTest, HomogeneousToyFieldFallsInside) {
  const int outer = 20;
  int inside = 0;
  for (int o = 0; o < outer; ++o) {
    Rng rng = make_stream(700 + o);
    std::vector<std::vector<double>> maxima;
    for (std::size_t i = 0; i < cells.size(); ++i) maxima.push_back(gev_sample(37, field[i], rng));
    const auto observed = out_sample_sweep(maxima, nb).rejections;
    inside += simulate_envelope(field, sizes, nb, 100, 900 + o).contains(observed);
  }
  EXPECT_GE(inside, 18);
}

}  // namespace
}  // namespace gevtrend
