#include "gevtrend/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "gevtrend/optimize.hpp"
#include "gevtrend/random.hpp"

namespace gevtrend {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr int kMaxRestarts = 3;

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return m;
}

void check_layout(std::span<const double> maxima, const LocationModel& model, std::span<const double> theta) {
  if (theta.size() != model.parameter_count()) {
    throw std::invalid_argument("negative_loglik: parameter vector has the wrong length");
  }
  if (model.kind() == ModelKind::LinearCovariate && model.covariate().size() != maxima.size()) {
    throw std::invalid_argument("negative_loglik: covariate length does not match the maxima");
  }
}

void validate_input(std::span<const double> maxima) {
  if (maxima.size() < 5) throw DegenerateInputError("fit_gev: at least 5 maxima are required");
  for (double x : maxima) {
    if (!std::isfinite(x)) throw std::invalid_argument("fit_gev: maxima must be finite");
  }
  if (std::all_of(maxima.begin(), maxima.end(), [&](double x) { return x == maxima.front(); })) {
    throw DegenerateInputError("fit_gev: maxima are constant");
  }
}

/// Optimization on standardized data: y = (x - mean) / sd, c = (cov - mean_c) / sd_c.
class StandardizedProblem {
 public:
  StandardizedProblem(std::span<const double> maxima, std::span<const double> covariate)
      : data_(moments(maxima)), model_(LocationModel::stationary()) {
    y_.reserve(maxima.size());
    for (double x : maxima) y_.push_back((x - data_.mean) / data_.sd);
    if (!covariate.empty()) {
      cov_ = moments(covariate);
      if (!(cov_.sd > 0.0)) throw DegenerateInputError("fit_gev: covariate is constant");
      std::vector<double> c;
      c.reserve(covariate.size());
      for (double x : covariate) c.push_back((x - cov_.mean) / cov_.sd);
      model_ = LocationModel::linear(std::move(c));
    }
  }

  std::size_t size() const { return y_.size(); }
  const LocationModel& model() const { return model_; }

  Objective objective() const {
    return [this](std::span<const double> th) { return negative_loglik(y_, model_, th); };
  }
  Gradient gradient() const {
    return [this](std::span<const double> th, std::span<double> g) {
      if (!negative_loglik_gradient(y_, model_, th, g)) std::fill(g.begin(), g.end(), 0.0);
    };
  }

  double gradient_norm(std::span<const double> th) const {
    std::vector<double> g(th.size());
    if (!negative_loglik_gradient(y_, model_, th, g)) return kInf;
    double m = 0.0;
    for (double v : g) m = std::max(m, std::abs(v));
    return m;
  }

  /// Maps an internal parameter vector back to the caller's units.
  GevFit to_fit(std::span<const double> th) const {
    const bool linear = model_.kind() == ModelKind::LinearCovariate;
    const double a = th[0];
    const double b = linear ? th[1] : 0.0;
    const double log_tau = th[linear ? 2 : 1];
    const double xi = th[linear ? 3 : 2];
    GevFit fit;
    double eta0 = data_.mean + data_.sd * a;
    if (linear) {
      const double slope = data_.sd * b / cov_.sd;
      eta0 -= slope * cov_.mean;
      fit.slope = slope;
    }
    fit.params = GevParams(eta0, data_.sd * std::exp(log_tau), xi);
    fit.n_obs = y_.size();
    return fit;
  }

 private:
  Moments data_;
  Moments cov_;
  std::vector<double> y_;
  LocationModel model_;
};

struct Candidate {
  std::vector<double> theta;
  double value = kInf;
  bool converged = false;
};

double shape_of(const StandardizedProblem& prob, std::span<const double> th) {
  return th[prob.model().kind() == ModelKind::LinearCovariate ? 3 : 2];
}

Candidate optimize(const StandardizedProblem& prob, std::vector<double> start) {
  const auto f = prob.objective();
  const auto g = prob.gradient();
  const bool linear = prob.model().kind() == ModelKind::LinearCovariate;
  const std::vector<double> steps = linear ? std::vector<double>{0.25, 0.25, 0.2, 0.1}
                                           : std::vector<double>{0.25, 0.2, 0.1};
  const double n = static_cast<double>(prob.size());
  // convergence is judged on the gradient of the standardized negative log-likelihood
  const double gtol = 1e-6 * n;

  Candidate best;
  std::vector<double> x = std::move(start);
  for (int attempt = 0; attempt <= kMaxRestarts; ++attempt) {
    if (attempt > 0) {
      Rng rng = make_stream(0x6765766669747ULL, {static_cast<std::uint64_t>(attempt)});
      x = best.theta;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += steps[i] * standard_normal(rng);
      if (!std::isfinite(f(x))) x = best.theta;
    }
    // the simplex only has to bring the polish into the basin; the gradient test decides convergence
    const auto simplex = nelder_mead(f, x, steps, {.ftol = 1e-6, .xtol = 1e-3, .max_evaluations = 4000});
    const auto polish = bfgs(f, g, simplex.x, {.gtol = 1e-3 * gtol, .max_iterations = 200});
    Candidate c{polish.x, polish.value, false};
    c.converged = std::isfinite(c.value) && prob.gradient_norm(c.theta) <= gtol && shape_of(prob, c.theta) > -1.0;
    if (c.value < best.value || best.theta.empty() || (c.value == best.value && c.converged)) best = c;
    if (best.converged) break;
  }
  return best;
}

std::vector<double> stationary_start(const StandardizedProblem& prob) {
  // Gumbel moment estimates on standardized data (unit sample sd)
  const double tau = std::sqrt(6.0) / std::numbers::pi;
  std::vector<double> start{-kEulerGamma * tau, std::log(tau), 0.1};
  if (!std::isfinite(prob.objective()(start))) start[2] = 0.0;
  return start;
}

GevFit finish(const StandardizedProblem& prob, const Candidate& c, std::span<const double> maxima,
              const LocationModel& model) {
  GevFit fit = prob.to_fit(c.theta);
  const auto theta = to_theta(fit);
  fit.loglik = -negative_loglik(maxima, model, theta);
  fit.converged = c.converged && std::isfinite(fit.loglik);
  return fit;
}

}  // namespace

LocationModel LocationModel::linear(std::vector<double> covariate) {
  if (covariate.empty()) throw std::invalid_argument("LocationModel: empty covariate");
  for (double x : covariate) {
    if (!std::isfinite(x)) throw std::invalid_argument("LocationModel: covariate contains missing values");
  }
  LocationModel m;
  m.kind_ = ModelKind::LinearCovariate;
  m.covariate_ = std::move(covariate);
  return m;
}

std::vector<double> to_theta(const GevFit& fit) {
  const auto& p = fit.params;
  if (fit.slope) return {p.eta(), *fit.slope, std::log(p.tau()), p.xi()};
  return {p.eta(), std::log(p.tau()), p.xi()};
}

double negative_loglik(std::span<const double> maxima, const LocationModel& model, std::span<const double> theta) {
  check_layout(maxima, model, theta);
  const bool linear = model.kind() == ModelKind::LinearCovariate;
  const double eta0 = theta[0];
  const double eta1 = linear ? theta[1] : 0.0;
  const double log_tau = theta[linear ? 2 : 1];
  const double xi = theta[linear ? 3 : 2];
  const double tau = std::exp(log_tau);
  if (!std::isfinite(tau) || !(tau > 0.0) || !std::isfinite(xi) || !std::isfinite(eta0) || !std::isfinite(eta1)) {
    return kInf;
  }
  const auto cov = model.covariate();
  double total = 0.0;
  for (std::size_t t = 0; t < maxima.size(); ++t) {
    const double eta = linear ? eta0 + eta1 * cov[t] : eta0;
    const double lf = detail::gev_logpdf_standard((maxima[t] - eta) / tau, xi);
    if (!std::isfinite(lf)) return kInf;
    total += lf;
  }
  return -(total - static_cast<double>(maxima.size()) * log_tau);
}

bool negative_loglik_gradient(std::span<const double> maxima, const LocationModel& model,
                              std::span<const double> theta, std::span<double> grad) {
  check_layout(maxima, model, theta);
  if (grad.size() != theta.size()) throw std::invalid_argument("negative_loglik_gradient: gradient size mismatch");
  const bool linear = model.kind() == ModelKind::LinearCovariate;
  const double eta0 = theta[0];
  const double eta1 = linear ? theta[1] : 0.0;
  const double tau = std::exp(theta[linear ? 2 : 1]);
  const double xi = theta[linear ? 3 : 2];
  const auto cov = model.covariate();

  double g_eta0 = 0.0, g_eta1 = 0.0, g_logtau = 0.0, g_xi = 0.0;
  for (std::size_t t = 0; t < maxima.size(); ++t) {
    const double c = linear ? cov[t] : 0.0;
    const double z = (maxima[t] - (eta0 + eta1 * c)) / tau;
    double lf = 0.0, dz = 0.0, dxi = 0.0;
    if (!detail::gev_logpdf_standard_grad(z, xi, lf, dz, dxi)) return false;
    const double d_eta = -dz / tau;
    g_eta0 += d_eta;
    g_eta1 += d_eta * c;
    g_logtau += -dz * z - 1.0;
    g_xi += dxi;
  }
  if (linear) {
    grad[0] = -g_eta0;
    grad[1] = -g_eta1;
    grad[2] = -g_logtau;
    grad[3] = -g_xi;
  } else {
    grad[0] = -g_eta0;
    grad[1] = -g_logtau;
    grad[2] = -g_xi;
  }
  return true;
}

GevFit fit_gev(std::span<const double> maxima, const LocationModel& model) {
  validate_input(maxima);
  if (model.kind() == ModelKind::LinearCovariate) {
    if (model.covariate().size() != maxima.size()) {
      throw std::invalid_argument("fit_gev: covariate length does not match the maxima");
    }
    return fit_nested(maxima, model.covariate()).alt_fit;
  }
  const StandardizedProblem prob(maxima, {});
  return finish(prob, optimize(prob, stationary_start(prob)), maxima, model);
}

NestedFit fit_nested(std::span<const double> maxima, std::span<const double> covariate) {
  validate_input(maxima);
  if (covariate.size() != maxima.size()) {
    throw std::invalid_argument("fit_nested: covariate length does not match the maxima");
  }
  const StandardizedProblem null_prob(maxima, {});
  const Candidate null_opt = optimize(null_prob, stationary_start(null_prob));

  const StandardizedProblem alt_prob(maxima, covariate);
  const auto& s = null_opt.theta;
  // simplex search keeps its starting vertex, so the alternative cannot end below the null
  const Candidate alt_opt = optimize(alt_prob, {s[0], 0.0, s[1], s[2]});

  NestedFit out;
  out.null_fit = finish(null_prob, null_opt, maxima, LocationModel::stationary());
  out.alt_fit = finish(alt_prob, alt_opt, maxima, LocationModel::linear({covariate.begin(), covariate.end()}));
  return out;
}

std::optional<std::vector<double>> stderr_from_hessian(std::span<const double> hessian, std::size_t dim) {
  if (hessian.size() != dim * dim) throw std::invalid_argument("stderr_from_hessian: size mismatch");
  Eigen::MatrixXd h(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      h(i, j) = 0.5 * (hessian[i * dim + j] + hessian[j * dim + i]);
    }
  }
  if (!h.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  std::vector<double> se(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(inv(i, i) > 0.0)) return std::nullopt;
    se[i] = std::sqrt(inv(i, i));
  }
  return se;
}

StdErrors profile_stderr(const GevFit& fit, std::span<const double> maxima, const LocationModel& model) {
  StdErrors out;
  if (!fit.converged) return out;
  const bool linear = model.kind() == ModelKind::LinearCovariate;
  const std::size_t dim = model.parameter_count();
  const std::size_t tau_index = linear ? 2 : 1;

  // natural coordinates: (eta0 [, eta1], tau, xi)
  std::vector<double> natural = to_theta(fit);
  natural[tau_index] = fit.params.tau();
  std::vector<double> steps(dim, 1e-5 * fit.params.tau());
  steps[dim - 1] = 1e-5;
  if (linear) {
    const double sd = moments(model.covariate()).sd;
    steps[1] = 1e-5 * fit.params.tau() / (sd > 0.0 ? sd : 1.0);
  }

  auto natural_gradient = [&](std::span<const double> x, std::span<double> g) {
    if (!(x[tau_index] > 0.0)) return false;
    std::vector<double> theta(x.begin(), x.end());
    theta[tau_index] = std::log(x[tau_index]);
    if (!negative_loglik_gradient(maxima, model, theta, g)) return false;
    g[tau_index] /= x[tau_index];
    return true;
  };

  std::vector<double> hessian(dim * dim);
  std::vector<double> gp(dim), gm(dim), x = natural;
  for (std::size_t j = 0; j < dim; ++j) {
    x[j] = natural[j] + steps[j];
    const bool okp = natural_gradient(x, gp);
    x[j] = natural[j] - steps[j];
    const bool okm = natural_gradient(x, gm);
    x[j] = natural[j];
    if (!okp || !okm) return out;
    for (std::size_t i = 0; i < dim; ++i) hessian[i * dim + j] = (gp[i] - gm[i]) / (2.0 * steps[j]);
  }
  if (auto se = stderr_from_hessian(hessian, dim)) {
    out.ok = true;
    out.values = std::move(*se);
  }
  return out;
}

}  // namespace gevtrend
