#pragma once

#include "gevtrend/fitter.hpp"
#include "gevtrend/types.hpp"

namespace gevtrend {

/// Deviance below -kNestingTolerance means the alternative fit ended below the null.
inline constexpr double kNestingTolerance = 1e-6;

class NestingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double standard_normal_cdf(double x) noexcept;

/// sgn(slope) * sqrt(2 (l1 - l0)). Small negative deviances are clamped to zero;
/// anything below -kNestingTolerance throws NestingError.
double signed_lrt(const GevFit& null_fit, const GevFit& alt_fit);

/// Two-sided normal p-value 2 Phi(-|t|). Throws std::domain_error for non-finite t.
double p_value(double tstat);

struct CellTestResult {
  CellId cell;
  int month = 0;
  Variable variable = Variable::Prod;
  Covariate covariate = Covariate::Time;
  double slope = 0.0;
  double tstat = 0.0;
  double pvalue = 1.0;
  NestedFit fits;
};

/// Fills slope, tstat and pvalue from a nested fit.
CellTestResult make_cell_test(CellId cell, int month, Variable variable, Covariate covariate, NestedFit fits);

}  // namespace gevtrend
