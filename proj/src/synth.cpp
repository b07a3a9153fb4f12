#include "gevtrend/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "gevtrend/config.hpp"
#include "gevtrend/inference.hpp"
#include "gevtrend/random.hpp"

namespace gevtrend {
namespace {

constexpr std::uint64_t kEnsoStream = 0x656e736fULL;
constexpr std::uint64_t kRawStream = 0x726177ULL;

double slope_at(const std::vector<double>& slopes, std::size_t i) { return slopes.empty() ? 0.0 : slopes[i]; }

/// Lower Cholesky factor of exp(-distance / range) over the cells, or empty for independence.
Eigen::MatrixXd copula_factor(const SyntheticFieldSpec& spec) {
  if (spec.copula == CopulaKind::Independent) return {};
  const auto cells = spec.cells();
  const auto n = static_cast<Eigen::Index>(cells.size());
  Eigen::MatrixXd corr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = cells[i].lon - cells[j].lon;
      const double dy = cells[i].lat - cells[j].lat;
      corr(i, j) = std::exp(-std::sqrt(dx * dx + dy * dy) / spec.range);
    }
    corr(i, i) += 1e-10;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) throw std::runtime_error("synth: correlation matrix is not positive definite");
  return llt.matrixL();
}

std::vector<double> latent_uniforms(const Eigen::MatrixXd& factor, std::size_t n, Rng& rng) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  if (factor.size() > 0) z = factor * z;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::clamp(standard_normal_cdf(z(static_cast<Eigen::Index>(i))), 1e-16, 1.0 - 1e-16);
  }
  return u;
}

std::vector<std::size_t> chosen_cells(std::size_t total, long long count, std::uint64_t seed, std::uint64_t stream) {
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (count < 0 || static_cast<std::size_t>(count) >= total) return order;
  Rng rng = make_stream(seed, {stream});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(count));
  return order;
}

}  // namespace

std::vector<CellId> SyntheticFieldSpec::cells() const {
  std::vector<CellId> out;
  out.reserve(cell_count());
  for (int i = 0; i < nlon; ++i) {
    for (int j = 0; j < nlat; ++j) out.push_back(CellId{lon0 + i, lat0 + j});
  }
  return out;
}

const GevParams& SyntheticFieldSpec::params_at(std::size_t cell) const {
  return cell_params.empty() ? base : cell_params[cell];
}

void SyntheticFieldSpec::validate() const {
  if (nlon < 1 || nlat < 1 || years < 1 || months.empty()) {
    throw std::invalid_argument("synth: grid dimensions, years and months must be non-empty");
  }
  for (int m : months) {
    if (m < 1 || m > 12) throw std::invalid_argument("synth: month out of range");
  }
  const auto n = cell_count();
  if ((!cell_params.empty() && cell_params.size() != n) || (!time_slope.empty() && time_slope.size() != n) ||
      (!enso_slope.empty() && enso_slope.size() != n)) {
    throw std::invalid_argument("synth: per-cell vectors must have one entry per cell");
  }
  if (copula == CopulaKind::Exponential && !(range > 0.0)) throw std::invalid_argument("synth: range must be positive");
}

EnsoIndex synthesize_enso(const SyntheticFieldSpec& spec) {
  EnsoIndex index;
  Rng rng = make_stream(spec.seed, {kEnsoStream});
  for (int y = spec.first_year; y < spec.first_year + spec.years; ++y) {
    for (int m = 1; m <= 12; ++m) index.add(y, m, standard_normal(rng));
  }
  return index;
}

double synthetic_location(const SyntheticFieldSpec& spec, const EnsoIndex& enso, std::size_t cell, int year, int month) {
  double eta = spec.params_at(cell).eta();
  const double ts = slope_at(spec.time_slope, cell);
  const double es = slope_at(spec.enso_slope, cell);
  if (ts != 0.0) eta += ts * static_cast<double>(year - spec.first_year + 1);
  if (es != 0.0) eta += es * enso.value(year, month);
  return eta;
}

namespace {

EnsoIndex resolve_enso(const SyntheticFieldSpec& spec) {
  if (spec.enso) return *spec.enso;
  return synthesize_enso(spec);
}

}  // namespace

SyntheticField generate_maxima_field(const SyntheticFieldSpec& spec, Execution exec, int workers) {
  spec.validate();
  const auto cells = spec.cells();
  const std::size_t n = cells.size();
  const auto factor = copula_factor(spec);

  SyntheticField field;
  field.cells = cells;
  field.enso = resolve_enso(spec);
  for (std::size_t i = 0; i < n; ++i) {
    field.time_null.push_back(slope_at(spec.time_slope, i) == 0.0);
    field.enso_null.push_back(slope_at(spec.enso_slope, i) == 0.0);
  }

  const std::size_t years = static_cast<std::size_t>(spec.years);
  const std::size_t tasks = spec.months.size() * years;
  // one latent vector per (month, year), each from its own stream
  const auto draws = parallel_map(
      tasks,
      [&](std::size_t task) {
        const int month = spec.months[task / years];
        const int year = spec.first_year + static_cast<int>(task % years);
        Rng rng = make_stream(spec.seed, {static_cast<std::uint64_t>(month), static_cast<std::uint64_t>(year)});
        const auto u = latent_uniforms(factor, n, rng);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& p = spec.params_at(i);
          x[i] = synthetic_location(spec, field.enso, i, year, month) + p.tau() * detail::gev_quantile_standard(u[i], p.xi());
        }
        return x;
      },
      exec, workers);

  for (std::size_t mi = 0; mi < spec.months.size(); ++mi) {
    const int month = spec.months[mi];
    for (std::size_t i = 0; i < n; ++i) {
      BlockMaximaSeries s;
      s.cell = cells[i];
      s.variable = spec.variable;
      s.month = month;
      for (std::size_t t = 0; t < years; ++t) {
        const int year = spec.first_year + static_cast<int>(t);
        s.years.push_back(year);
        s.maxima.push_back(draws[mi * years + t][i]);
        s.n_obs.push_back(days_in_month(year, month) * kObservationsPerDay);
      }
      field.series.push_back(std::move(s));
    }
  }
  return field;
}

std::vector<RawSeries> generate_raw_field(const SyntheticFieldSpec& spec, const RawFieldOptions& options,
                                          Execution exec, int workers) {
  spec.validate();
  if (!(std::abs(options.ar_phi) < 1.0)) throw std::invalid_argument("synth: |ar_phi| must be below 1");
  const auto cells = spec.cells();
  const EnsoIndex enso = resolve_enso(spec);
  std::vector<int> months = spec.months;
  std::sort(months.begin(), months.end());

  return parallel_map(
      cells.size(),
      [&](std::size_t i) {
        RawSeries raw;
        raw.cell = cells[i];
        const auto& p = spec.params_at(i);
        for (int year = spec.first_year; year < spec.first_year + spec.years; ++year) {
          for (int month : months) {
            Rng rng = make_stream(spec.seed, {kRawStream, i, static_cast<std::uint64_t>(year),
                                              static_cast<std::uint64_t>(month)});
            const int n = days_in_month(year, month) * kObservationsPerDay;
            const GevParams target(synthetic_location(spec, enso, i, year, month), p.tau(), p.xi());
            const std::int64_t start = parse_timestamp(std::to_string(year) + "-" + (month < 10 ? "0" : "") +
                                                       std::to_string(month) + "-01T00:00:00Z");
            const double innovation_sd = std::sqrt(1.0 - options.ar_phi * options.ar_phi);
            double z = standard_normal(rng);
            for (int k = 0; k < n; ++k) {
              if (k > 0) z = options.ar_phi * z + innovation_sd * standard_normal(rng);
              // parent G^(1/n): the maximum of n independent draws follows G. Its quantile
              // at u is the G-quantile at u^n, taken through -log(u^n) = -n log(u).
              const double log_u = std::log(std::clamp(standard_normal_cdf(z), 1e-300, 1.0 - 1e-16));
              const double x = target.eta() + target.tau() * detail::gev_quantile_standard_neglog(-n * log_u, target.xi());
              const double cape = 100.0 + 1000.0 * -std::log(open_uniform(rng));
              double srh = 0.0;
              double cape_out = cape;
              switch (spec.variable) {
                case Variable::Prod: srh = x / std::sqrt(cape); break;
                case Variable::Srh: srh = x; break;
                case Variable::Cape:
                  cape_out = std::max(x, 0.0);
                  srh = 50.0 * standard_normal(rng);
                  break;
              }
              raw.timestamps.push_back(start + static_cast<std::int64_t>(k) * kStepSeconds);
              raw.cape.push_back(cape_out);
              raw.srh.push_back(srh);
            }
          }
        }
        return raw;
      },
      exec, workers);
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  const auto kv = KeyValueConfig::load(path);
  SynthConfig cfg;
  auto& s = cfg.spec;
  s.lon0 = static_cast<int>(kv.integer_or("lon0", s.lon0));
  s.lat0 = static_cast<int>(kv.integer_or("lat0", s.lat0));
  s.nlon = static_cast<int>(kv.integer_or("nlon", s.nlon));
  s.nlat = static_cast<int>(kv.integer_or("nlat", s.nlat));
  s.first_year = static_cast<int>(kv.integer_or("first_year", s.first_year));
  s.years = static_cast<int>(kv.integer_or("years", s.years));
  if (kv.has("months")) s.months = kv.integer_list("months");
  if (auto v = kv.get("variable")) s.variable = parse_variable(*v);
  s.base = GevParams(kv.number_or("eta", s.base.eta()), kv.number_or("tau", s.base.tau()), kv.number_or("xi", s.base.xi()));
  const auto copula = kv.string_or("copula", "independent");
  if (copula == "independent") {
    s.copula = CopulaKind::Independent;
  } else if (copula == "exponential") {
    s.copula = CopulaKind::Exponential;
  } else {
    throw std::invalid_argument("synth config: copula must be 'independent' or 'exponential'");
  }
  s.range = kv.number_or("range", s.range);
  s.seed = static_cast<std::uint64_t>(kv.integer_or("seed", static_cast<long long>(s.seed)));

  const std::size_t n = s.cell_count();
  auto assign_slopes = [&](const std::string& key, std::uint64_t stream, std::vector<double>& target) {
    const double slope = kv.number_or(key, 0.0);
    const long long count = kv.integer_or(key + "_cells", -1);
    if (slope == 0.0) return;
    target.assign(n, 0.0);
    for (std::size_t i : chosen_cells(n, count, s.seed, stream)) target[i] = slope;
  };
  assign_slopes("time_slope", 0x74696d65ULL, s.time_slope);
  assign_slopes("enso_slope", kEnsoStream, s.enso_slope);

  if (kv.has("shift")) {
    const double shift = kv.number_or("shift", 0.0);
    const auto region = kv.integer_list("shift_region");
    if (region.size() != 4) throw std::invalid_argument("synth config: shift_region needs lon_lo,lon_hi,lat_lo,lat_hi");
    const auto cells = s.cells();
    s.cell_params.assign(n, s.base);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = cells[i];
      if (c.lon >= region[0] && c.lon <= region[1] && c.lat >= region[2] && c.lat <= region[3]) {
        s.cell_params[i] = GevParams(s.base.eta() + shift, s.base.tau(), s.base.xi());
      }
    }
  }
  if (auto f = kv.get("enso_file")) {
    auto p = std::filesystem::path(*f);
    if (p.is_relative()) p = path.parent_path() / p;
    s.enso = load_enso(p);
  }
  cfg.write_raw = kv.flag_or("raw", false);
  cfg.raw.ar_phi = kv.number_or("ar_phi", 0.0);
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw std::invalid_argument("synth config: unknown key '" + unused.front() + "'");
  }
  s.validate();
  return cfg;
}

void write_synthetic_field(const SynthConfig& config, const std::filesystem::path& dir, Execution exec, int workers) {
  std::filesystem::create_directories(dir);
  const auto field = generate_maxima_field(config.spec, exec, workers);
  write_maxima_csv(dir / "maxima.csv", field.series);
  write_enso(dir / "enso.txt", field.enso);
  std::ofstream truth(dir / "truth.csv", std::ios::binary);
  truth << "lon,lat,time_slope,enso_slope\n";
  for (std::size_t i = 0; i < field.cells.size(); ++i) {
    truth << field.cells[i].lon << ',' << field.cells[i].lat << ','
          << format_double(slope_at(config.spec.time_slope, i)) << ','
          << format_double(slope_at(config.spec.enso_slope, i)) << '\n';
  }
  if (config.write_raw) {
    write_grid_csv(dir / "grid.csv", generate_raw_field(config.spec, config.raw, exec, workers));
  }
}

}  // namespace gevtrend
