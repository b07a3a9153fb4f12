#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gevtrend/gevdist.hpp"

namespace gevtrend {

enum class ModelKind { Stationary, LinearCovariate };

/// Covariate specification for the location: eta(t) = eta0 [+ eta1 * x_t].
class LocationModel {
 public:
  static LocationModel stationary() { return LocationModel(); }
  /// Throws std::invalid_argument on an empty or non-finite covariate.
  static LocationModel linear(std::vector<double> covariate);

  ModelKind kind() const { return kind_; }
  std::span<const double> covariate() const { return covariate_; }
  /// 3 for stationary, 4 for the linear model.
  std::size_t parameter_count() const { return kind_ == ModelKind::Stationary ? 3 : 4; }

 private:
  LocationModel() = default;
  ModelKind kind_ = ModelKind::Stationary;
  std::vector<double> covariate_;
};

/// Maximum-likelihood fit. params holds (eta0, tau, xi), i.e. the location at covariate 0.
struct GevFit {
  GevParams params;
  std::optional<double> slope;
  double loglik = 0.0;
  bool converged = false;
  std::size_t n_obs = 0;

  /// Location at covariate value x.
  double location_at(double x) const { return params.eta() + slope.value_or(0.0) * x; }
};

class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter vector (eta0 [, eta1], log tau, xi) of a fit, in the layout negative_loglik expects.
std::vector<double> to_theta(const GevFit& fit);

/// -sum_t log g(x_t; eta(t), tau, xi); +inf when any observation is outside the support.
/// Throws std::invalid_argument on covariate or theta length mismatch.
double negative_loglik(std::span<const double> maxima, const LocationModel& model, std::span<const double> theta);

/// Analytic gradient of negative_loglik with respect to theta. Returns false outside the support.
bool negative_loglik_gradient(std::span<const double> maxima, const LocationModel& model,
                              std::span<const double> theta, std::span<double> grad);

/// Fits the model by simplex search followed by a quasi-Newton polish, restarting
/// up to three times from jittered points. Throws DegenerateInputError for fewer
/// than 5 values or a constant series. Fits with xi <= -1 are reported unconverged.
GevFit fit_gev(std::span<const double> maxima, const LocationModel& model);

struct NestedFit {
  GevFit null_fit;  // stationary
  GevFit alt_fit;   // location linear in the covariate
};

/// Stationary and linear-covariate fits on the same data. The covariate fit starts
/// from the stationary optimum with zero slope, so alt_fit.loglik >= null_fit.loglik.
NestedFit fit_nested(std::span<const double> maxima, std::span<const double> covariate);

/// Standard errors from the inverse observed information, ordered (eta0 [, eta1], tau, xi).
struct StdErrors {
  bool ok = false;  // false when the fit is unconverged or the Hessian is not positive definite
  std::vector<double> values;
};

StdErrors profile_stderr(const GevFit& fit, std::span<const double> maxima, const LocationModel& model);

/// sqrt(diag(H^{-1})) for a row-major dim x dim Hessian; nullopt unless H is positive definite.
std::optional<std::vector<double>> stderr_from_hessian(std::span<const double> hessian, std::size_t dim);

}  // namespace gevtrend
