#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gevtrend/random.hpp"

namespace gevtrend {

/// Shapes with |xi| below this band are evaluated with the Gumbel-limit formulas.
inline constexpr double kShapeTolerance = 1e-8;

/// Location / scale / shape of a generalized extreme-value law.
class GevParams {
 public:
  GevParams() = default;
  /// Throws std::invalid_argument unless tau > 0 and all values are finite.
  GevParams(double eta, double tau, double xi);

  double eta() const { return eta_; }
  double tau() const { return tau_; }
  double xi() const { return xi_; }

  /// Lower end of the support (-inf unless xi > 0).
  double lower_endpoint() const;
  /// Upper end of the support (+inf unless xi < 0).
  double upper_endpoint() const;
  /// True iff 1 + xi (x - eta) / tau > 0 (all reals in the Gumbel band).
  bool in_support(double x) const;

 private:
  double eta_ = 0.0;
  double tau_ = 1.0;
  double xi_ = 0.0;
};

double gev_cdf(double x, const GevParams& p) noexcept;

/// Log density; -inf outside the support.
double gev_logpdf(double x, const GevParams& p) noexcept;

/// Inverse CDF. Throws std::domain_error unless 0 < u < 1.
double gev_quantile(double u, const GevParams& p);

/// n i.i.d. draws by inverse transform; identical output for identical seeds.
std::vector<double> gev_sample(std::size_t n, const GevParams& p, std::uint64_t seed);
std::vector<double> gev_sample(std::size_t n, const GevParams& p, Rng& rng);

namespace detail {

/// Standardized log density log g(z; xi) of (x - eta) / tau, without the -log(tau) term.
double gev_logpdf_standard(double z, double xi) noexcept;

/// Standardized log density together with its partial derivatives in z and xi.
/// Returns false (and leaves outputs untouched) outside the support.
bool gev_logpdf_standard_grad(double z, double xi, double& logf, double& d_z, double& d_xi) noexcept;

double gev_quantile_standard(double u, double xi) noexcept;
/// Standardized quantile at probability exp(-y), for y > 0; avoids forming tiny probabilities.
double gev_quantile_standard_neglog(double y, double xi) noexcept;

}  // namespace detail
}  // namespace gevtrend
