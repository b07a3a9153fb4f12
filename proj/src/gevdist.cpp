#include "gevtrend/gevdist.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gevtrend {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool gumbel_band(double xi) { return std::abs(xi) < kShapeTolerance; }

}  // namespace

GevParams::GevParams(double eta, double tau, double xi) : eta_(eta), tau_(tau), xi_(xi) {
  if (!std::isfinite(eta) || !std::isfinite(tau) || !std::isfinite(xi)) {
    throw std::invalid_argument("GevParams: parameters must be finite");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("GevParams: scale must be strictly positive");
  }
}

double GevParams::lower_endpoint() const {
  if (gumbel_band(xi_) || xi_ < 0.0) return -kInf;
  return eta_ - tau_ / xi_;
}

double GevParams::upper_endpoint() const {
  if (gumbel_band(xi_) || xi_ > 0.0) return kInf;
  return eta_ - tau_ / xi_;
}

bool GevParams::in_support(double x) const {
  if (gumbel_band(xi_)) return std::isfinite(x);
  return 1.0 + xi_ * (x - eta_) / tau_ > 0.0;
}

double gev_cdf(double x, const GevParams& p) noexcept {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  const double z = (x - p.eta()) / p.tau();
  const double xi = p.xi();
  if (gumbel_band(xi)) {
    return std::exp(-std::exp(-z));
  }
  const double t = 1.0 + xi * z;
  if (!(t > 0.0)) return xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log1p(xi * z) / xi));
}

double gev_logpdf(double x, const GevParams& p) noexcept {
  return detail::gev_logpdf_standard((x - p.eta()) / p.tau(), p.xi()) - std::log(p.tau());
}

double gev_quantile(double u, const GevParams& p) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("gev_quantile: probability must lie in (0, 1)");
  }
  return p.eta() + p.tau() * detail::gev_quantile_standard(u, p.xi());
}

std::vector<double> gev_sample(std::size_t n, const GevParams& p, Rng& rng) {
  std::vector<double> out(n);
  for (auto& x : out) x = p.eta() + p.tau() * detail::gev_quantile_standard(open_uniform(rng), p.xi());
  return out;
}

std::vector<double> gev_sample(std::size_t n, const GevParams& p, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  return gev_sample(n, p, rng);
}

namespace detail {

double gev_logpdf_standard(double z, double xi) noexcept {
  if (!std::isfinite(z)) return -kInf;
  if (gumbel_band(xi)) return -z - std::exp(-z);
  const double xz = xi * z;
  if (!(xz > -1.0)) return -kInf;
  const double log_t = std::log1p(xz);
  return -(1.0 + 1.0 / xi) * log_t - std::exp(-log_t / xi);
}

bool gev_logpdf_standard_grad(double z, double xi, double& logf, double& d_z, double& d_xi) noexcept {
  if (!std::isfinite(z)) return false;
  // Below this band the xi-derivative is taken from its Gumbel limit; the closed form
  // loses accuracy through the L/xi^2 cancellation.
  constexpr double kGradBand = 1e-6;
  if (gumbel_band(xi)) {
    const double e = std::exp(-z);
    logf = -z - e;
    d_z = -1.0 + e;
    d_xi = 0.5 * z * z - z - 0.5 * e * z * z;
    return true;
  }
  const double xz = xi * z;
  if (!(xz > -1.0)) return false;
  const double t = 1.0 + xz;
  const double log_t = std::log1p(xz);
  const double u = std::exp(-log_t / xi);
  logf = -(1.0 + 1.0 / xi) * log_t - u;
  d_z = (u - 1.0 - xi) / t;
  if (std::abs(xi) < kGradBand) {
    d_xi = 0.5 * z * z - z - 0.5 * std::exp(-z) * z * z;
    return true;
  }
  const double a = log_t / (xi * xi);
  const double b = z / (xi * t);
  d_xi = a - (1.0 + 1.0 / xi) * z / t - u * (a - b);
  return true;
}

double gev_quantile_standard(double u, double xi) noexcept { return gev_quantile_standard_neglog(-std::log(u), xi); }

double gev_quantile_standard_neglog(double y, double xi) noexcept {
  if (gumbel_band(xi)) return -std::log(y);
  return std::expm1(-xi * std::log(y)) / xi;
}

}  // namespace detail
}  // namespace gevtrend
