#include "gevtrend/inference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gevtrend {

double standard_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double signed_lrt(const GevFit& null_fit, const GevFit& alt_fit) {
  if (null_fit.slope || !alt_fit.slope) {
    throw std::invalid_argument("signed_lrt: expects a stationary null and a covariate alternative");
  }
  double deviance = 2.0 * (alt_fit.loglik - null_fit.loglik);
  if (!std::isfinite(deviance)) throw std::invalid_argument("signed_lrt: non-finite log-likelihood");
  if (deviance < 0.0) {
    if (deviance < -kNestingTolerance) {
      throw NestingError("signed_lrt: negative deviance " + std::to_string(deviance));
    }
    deviance = 0.0;
  }
  const double slope = *alt_fit.slope;
  const double sign = slope > 0.0 ? 1.0 : (slope < 0.0 ? -1.0 : 0.0);
  return sign * std::sqrt(deviance);
}

double p_value(double tstat) {
  if (!std::isfinite(tstat)) throw std::domain_error("p_value: statistic must be finite");
  // 2 Phi(-|t|) = erfc(|t| / sqrt 2), without the cancellation of 1 - Phi
  return std::erfc(std::abs(tstat) / std::numbers::sqrt2);
}

CellTestResult make_cell_test(CellId cell, int month, Variable variable, Covariate covariate, NestedFit fits) {
  CellTestResult r;
  r.cell = cell;
  r.month = month;
  r.variable = variable;
  r.covariate = covariate;
  r.slope = fits.alt_fit.slope.value_or(0.0);
  r.tstat = signed_lrt(fits.null_fit, fits.alt_fit);
  r.pvalue = p_value(r.tstat);
  r.fits = std::move(fits);
  return r;
}

}  // namespace gevtrend
