#include "gevtrend/inference.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

namespace gevtrend {
namespace {

GevFit stationary_fit(double loglik) {
  GevFit f;
  f.params = GevParams(0.0, 1.0, 0.0);
  f.loglik = loglik;
  f.converged = true;
  return f;
}

GevFit linear_fit(double loglik, double slope) {
  GevFit f = stationary_fit(loglik);
  f.slope = slope;
  return f;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

TEST(SignedLrt, ZeroDevianceGivesZero) {
  EXPECT_EQ(signed_lrt(stationary_fit(-100.0), linear_fit(-100.0, 2.0)), 0.0);
}

TEST(SignedLrt, ChiSquareQuantileRelation) {
  // half the 95% chi-square(1) quantile as the likelihood gain gives the two-sided 5% normal point
  const double half = 0.5 * boost::math::quantile(boost::math::chi_squared(1.0), 0.95);
  EXPECT_NEAR(half, 1.92075, 5e-5);
  // the tabulated pair is rounded to five decimals, which moves the root by about 1.4e-5
  EXPECT_NEAR(signed_lrt(stationary_fit(-50.0), linear_fit(-50.0 + 1.92075, -0.3)), -1.95996, 5e-5);
  EXPECT_NEAR(signed_lrt(stationary_fit(-50.0), linear_fit(-50.0 + half, -0.3)), normal_quantile(0.025), 1e-12);
}

TEST(SignedLrt, HalfUnitGainGivesOne) {
  EXPECT_NEAR(signed_lrt(stationary_fit(-10.0), linear_fit(-9.5, 0.01)), 1.0, 1e-14);
}

TEST(SignedLrt, ClampsTinyNegativeDeviance) {
  EXPECT_EQ(signed_lrt(stationary_fit(-10.0), linear_fit(-10.0 - 1e-7, 1.0)), 0.0);
}

TEST(SignedLrt, ThrowsOnNestingViolation) {
  EXPECT_THROW(signed_lrt(stationary_fit(-10.0), linear_fit(-10.001, 1.0)), NestingError);
}

TEST(SignedLrt, RejectsSwappedModels) {
  EXPECT_THROW(signed_lrt(linear_fit(-10.0, 1.0), linear_fit(-9.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(signed_lrt(stationary_fit(-10.0), stationary_fit(-9.0)), std::invalid_argument);
}

TEST(SignedLrt, SignFollowsSlope) {
  for (double slope : {-3.0, -1e-9, 1e-9, 4.0}) {
    const double t = signed_lrt(stationary_fit(-20.0), linear_fit(-18.0, slope));
    EXPECT_EQ(std::signbit(t), std::signbit(slope));
    EXPECT_NEAR(std::abs(t), 2.0, 1e-14);
  }
}

TEST(PValue, ZeroStatisticGivesOne) { EXPECT_EQ(p_value(0.0), 1.0); }

TEST(PValue, NormalQuantileOracle) {
  EXPECT_NEAR(p_value(1.95996), 0.05, 1e-5);
  EXPECT_NEAR(p_value(-1.95996), 0.05, 1e-5);
  EXPECT_NEAR(p_value(2.5758), 0.01, 1e-5);
  EXPECT_NEAR(p_value(-2.5758), 0.01, 1e-5);
  for (double p : {0.5, 0.1, 1e-3, 1e-8}) {
    EXPECT_NEAR(p_value(normal_quantile(1.0 - p / 2.0)), p, 1e-12 * std::max(1.0, 1.0 / p) * p + 1e-15);
  }
}

TEST(PValue, MatchesTwiceNormalCdf) {
  for (double t = -8.0; t <= 8.0; t += 0.37) EXPECT_NEAR(p_value(t), 2.0 * standard_normal_cdf(-std::abs(t)), 1e-15);
}

TEST(PValue, SymmetricAndDecreasingInMagnitude) {
  double prev = 1.0;
  for (double t = 0.05; t <= 10.0; t += 0.05) {
    EXPECT_EQ(p_value(t), p_value(-t));
    EXPECT_LT(p_value(t), prev);
    prev = p_value(t);
  }
}

TEST(PValue, RejectsNonFinite) {
  EXPECT_THROW(p_value(std::nan("")), std::domain_error);
  EXPECT_THROW(p_value(INFINITY), std::domain_error);
}

TEST(StandardNormalCdf, AgreesWithBoost) {
  const boost::math::normal n;
  for (double x = -10.0; x <= 10.0; x += 0.25) {
    const double ref = boost::math::cdf(n, x);
    EXPECT_NEAR(standard_normal_cdf(x), ref, 1e-12 * std::max(ref, 1e-3));
  }
}

TEST(MakeCellTest, FillsStatisticAndPValue) {
  std::vector<double> t(37);
  std::iota(t.begin(), t.end(), 1.0);
  Rng rng = make_stream(4);
  std::vector<double> x(37);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = gev_quantile(open_uniform(rng), GevParams(1000.0 + 15.0 * t[i], 200.0, 0.0));
  const auto r = make_cell_test(CellId{-100, 40}, 4, Variable::Prod, Covariate::Time, fit_nested(x, t));
  EXPECT_EQ(r.cell, (CellId{-100, 40}));
  EXPECT_EQ(r.month, 4);
  EXPECT_GT(r.slope, 0.0);
  EXPECT_GT(r.tstat, 0.0);
  EXPECT_EQ(r.pvalue, p_value(r.tstat));
  EXPECT_EQ(r.slope, *r.fits.alt_fit.slope);
}

}  // namespace
}  // namespace gevtrend
