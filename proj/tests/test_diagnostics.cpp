#include "gevtrend/diagnostics.hpp"
#include "gevtrend/random.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <vector>

namespace gevtrend {
namespace {

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = standard_normal(rng);
  return x;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::vector<double> x(n);
  double prev = standard_normal(rng) / std::sqrt(1.0 - phi * phi);
  for (auto& v : x) {
    v = phi * prev + standard_normal(rng);
    prev = v;
  }
  return x;
}

std::vector<double> ma1(std::size_t n, double theta, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::vector<double> x(n);
  double prev = standard_normal(rng);
  for (auto& v : x) {
    const double e = standard_normal(rng);
    v = e + theta * prev;
    prev = e;
  }
  return x;
}

// Q = n sum r_k^2 written directly from the sample autocorrelation definition.
double reference_q(const std::vector<double>& x, int h) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  double q = 0.0;
  for (int k = 1; k <= h; ++k) {
    double ck = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) ck += (x[t] - mean) * (x[t + k] - mean);
    q += (ck / c0) * (ck / c0);
  }
  return n * q;
}

TEST(FitArma, WhiteNoiseResidualsAreCentredSeries) {
  const auto x = white_noise(100, 1);
  const auto fit = fit_arma(x, 0, 0);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 100.0;
  ASSERT_EQ(fit.residuals.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(fit.residuals[i], x[i] - mean);
  EXPECT_TRUE(fit.admissible);
  EXPECT_NEAR(fit.aic, 2.0 - 2.0 * fit.loglik, 1e-12);
}

TEST(FitArma, RecoversAr1Coefficient) {
  const auto fit = fit_arma(ar1(1000, 0.8, 2), 1, 0);
  ASSERT_EQ(fit.ar.size(), 1u);
  EXPECT_NEAR(fit.ar[0], 0.8, 0.05);
  EXPECT_TRUE(fit.admissible);
  EXPECT_EQ(fit.residuals.size(), 999u);
}

TEST(FitArma, RecoversMa1Coefficient) {
  const auto fit = fit_arma(ma1(1000, 0.5, 3), 0, 1);
  ASSERT_EQ(fit.ma.size(), 1u);
  EXPECT_NEAR(fit.ma[0], 0.5, 0.07);
}

TEST(FitArma, AicCountsVarianceParameter) {
  const auto fit = fit_arma(ar1(300, 0.5, 4), 2, 1);
  EXPECT_NEAR(fit.aic, 2.0 * 4.0 - 2.0 * fit.loglik, 1e-12);
  const double n = 300.0 - kMaxArmaOrder;
  EXPECT_NEAR(fit.loglik, -0.5 * n * (std::log(2.0 * M_PI * fit.sigma2) + 1.0), 1e-9);
}

TEST(FitArma, RejectsShortSeriesAndBadOrders) {
  EXPECT_THROW(fit_arma(white_noise(49, 1), 0, 0), std::invalid_argument);
  EXPECT_THROW(fit_arma(white_noise(60, 1), 3, 0), std::invalid_argument);
  EXPECT_THROW(fit_arma(white_noise(60, 1), 0, -1), std::invalid_argument);
}

TEST(FitArma, FlagsExplosiveCoefficients) {
  Rng rng = make_stream(5);
  std::vector<double> x(200);
  double prev = 1.0;
  for (auto& v : x) prev = v = 1.04 * prev + standard_normal(rng);
  const auto fit = fit_arma(x, 1, 0);
  EXPECT_GT(std::abs(fit.ar[0]), 1.0);
  EXPECT_FALSE(fit.admissible);
}

TEST(SelectArma, MostlyPicksWhiteNoiseOnWhiteNoise) {
  int zero = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto fit = select_arma(white_noise(248, 100 + r));
    zero += fit.p == 0 && fit.q == 0;
  }
  EXPECT_GT(zero, static_cast<int>(0.8 * reps));
}

TEST(SelectArma, SelectionDoesNotDependOnUnits) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = white_noise(248, seed);
    const auto a = select_arma(x);
    for (auto& v : x) v *= 1000.0;
    const auto b = select_arma(x);
    EXPECT_EQ(a.p, b.p);
    EXPECT_EQ(a.q, b.q);
  }
}

TEST(SelectArma, ChoosesAutoregressionForAr1) {
  const auto fit = select_arma(ar1(248, 0.8, 6));
  EXPECT_GE(fit.p + fit.q, 1);
  EXPECT_TRUE(fit.admissible);
}

TEST(BoxPierce, MatchesDirectDefinitionAndChiSquareTail) {
  const auto x = ar1(248, 0.3, 7);
  const auto bp = box_pierce(x, 20, 1, 1);
  EXPECT_NEAR(bp.statistic, reference_q(x, 20), 1e-9);
  EXPECT_EQ(bp.dof, 18);
  EXPECT_NEAR(bp.pvalue, boost::math::cdf(boost::math::complement(boost::math::chi_squared(18.0), bp.statistic)), 1e-12);
}

TEST(BoxPierce, ZeroWhenNoAutocorrelationWithinLags) {
  std::vector<double> x(60, 0.0);
  x.front() = 1.0;
  x.back() = -1.0;
  // centred values differ from zero, so check against the reference rather than exact zero
  EXPECT_NEAR(box_pierce(x, 20).statistic, reference_q(x, 20), 1e-12);
  std::vector<double> centred(60, 0.0);
  centred.front() = 1.0;
  centred.back() = -1.0;
  const double mean = std::accumulate(centred.begin(), centred.end(), 0.0);
  ASSERT_EQ(mean, 0.0);
  EXPECT_EQ(box_pierce(centred, 20).statistic, 0.0);
  EXPECT_EQ(box_pierce(centred, 20).pvalue, 1.0);
}

TEST(BoxPierce, NonNegativeAndMonotoneInLags) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = white_noise(248, seed);
    double prev = 0.0;
    for (int h = 1; h <= 40; ++h) {
      const double q = box_pierce(x, h).statistic;
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
}

TEST(BoxPierce, RejectsInsufficientLength) {
  EXPECT_THROW(box_pierce(white_noise(40, 1), 20), std::invalid_argument);
  EXPECT_THROW(box_pierce(white_noise(100, 1), 3, 2, 1), std::invalid_argument);
}

TEST(BoxPierce, CalibratedOnGaussianNoise) {
  int rejected = 0;
  for (int r = 0; r < 1000; ++r) rejected += box_pierce(white_noise(248, 5000 + r), 20).pvalue < 0.05;
  EXPECT_NEAR(rejected / 1000.0, 0.05, 0.02);
}

TEST(BoxPierce, DetectsRawAr1) {
  int strong = 0;
  for (int r = 0; r < 500; ++r) strong += box_pierce(ar1(248, 0.8, 9000 + r), 20).pvalue < 0.01;
  EXPECT_GT(strong, 495);
}

std::vector<ValueBlock> blocks_from(std::size_t count, bool autoregressive, std::uint64_t seed) {
  std::vector<ValueBlock> blocks;
  for (std::size_t i = 0; i < count; ++i) {
    ValueBlock b;
    b.cell = CellId{-100 + static_cast<int>(i % 5), 40};
    b.month = 4;
    b.year = 1979 + static_cast<int>(i / 5);
    b.values = autoregressive ? ar1(240, 0.8, seed + i) : white_noise(240, seed + i);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

TEST(ScreenBlocks, WhiteNoiseBlocksRejectAtNominalRate) {
  const auto summary = screen_blocks(blocks_from(400, false, 100), kDefaultLags, Execution::Serial);
  EXPECT_EQ(summary.blocks.size(), 400u);
  EXPECT_NEAR(summary.rejection_fraction, 0.05, 0.02);
  EXPECT_NEAR(summary.raw_rejection_fraction, 0.05, 0.03);
}

TEST(ScreenBlocks, Ar1BlocksRejectRawButNotWhitened) {
  const auto summary = screen_blocks(blocks_from(400, true, 200), kDefaultLags, Execution::Serial);
  EXPECT_GT(summary.raw_rejection_fraction, 0.9);
  EXPECT_NEAR(summary.rejection_fraction, 0.05, 0.02);
}

TEST(ScreenBlocks, SkipsShortBlocks) {
  auto blocks = blocks_from(4, false, 1);
  blocks[1].values.resize(30);
  const auto summary = screen_blocks(blocks);
  EXPECT_EQ(summary.blocks.size(), 3u);
  EXPECT_EQ(summary.skipped_blocks, 1u);
}

TEST(ScreenBlocks, SampledCellsSingleCellRuns) {
  std::vector<std::vector<ValueBlock>> per_cell(6);
  for (std::size_t c = 0; c < per_cell.size(); ++c) per_cell[c] = blocks_from(2, false, 10 * c + 1);
  const auto one = screen_blocks(per_cell, 1, 42);
  EXPECT_EQ(one.cells, 1u);
  EXPECT_EQ(one.blocks.size(), 2u);
  const auto capped = screen_blocks(per_cell, 50, 42);
  EXPECT_EQ(capped.cells, 6u);
  EXPECT_EQ(capped.blocks.size(), 12u);
}

TEST(ScreenBlocks, SamplingIsDeterministicAndSchedulingFree) {
  std::vector<std::vector<ValueBlock>> per_cell(10);
  for (std::size_t c = 0; c < per_cell.size(); ++c) per_cell[c] = blocks_from(2, c % 2 == 0, 10 * c + 1);
  const auto a = screen_blocks(per_cell, 4, 9, kDefaultLags, Execution::Serial);
  const auto b = screen_blocks(per_cell, 4, 9, kDefaultLags, Execution::Parallel, 3);
  ASSERT_EQ(a.blocks.size(), b.blocks.size());
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    EXPECT_EQ(a.blocks[i].cell, b.blocks[i].cell);
    EXPECT_EQ(a.blocks[i].box_pierce_q, b.blocks[i].box_pierce_q);
  }
  EXPECT_EQ(a.rejection_fraction, b.rejection_fraction);
}

}  // namespace
}  // namespace gevtrend
