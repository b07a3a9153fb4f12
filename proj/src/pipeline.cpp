#include "gevtrend/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gevtrend/random.hpp"

namespace gevtrend {
namespace {

constexpr std::array<const char*, 12> kMonthNames{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::string two_digits(int m) { return (m < 10 ? "0" : "") + std::to_string(m); }

std::string q_tag(double q) {
  std::string s = format_double(q * 100.0);
  std::replace(s.begin(), s.end(), '.', 'p');
  return (s.size() == 1 ? "0" : "") + s;
}

std::string file_label(const CovariateAnalysis& a) {
  std::string label = a.label;
  for (auto& c : label) {
    if (c == ' ') c = '-';
  }
  label.erase(std::remove(label.begin(), label.end(), '.'), label.end());
  return label;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::uint64_t derived_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  Rng rng = make_stream(seed, stream);
  return rng();
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["grid"] = c.grid_path.string();
  j["maxima"] = c.maxima_path.string();
  j["enso"] = c.enso_path.string();
  std::vector<std::string> vars, covs;
  for (auto v : c.variables) vars.emplace_back(to_string(v));
  for (auto v : c.covariates) covs.emplace_back(to_string(v));
  j["variables"] = vars;
  j["months"] = c.months;
  j["covariates"] = covs;
  j["q"] = c.q_levels;
  j["replicates"] = c.replicates;
  j["sample_cells"] = c.sample_cells;
  j["seed"] = c.seed;
  j["grid_bounds"] = {c.bounds.lon_min, c.bounds.lon_max, c.bounds.lat_min, c.bounds.lat_max};
  if (c.first_year) j["first_year"] = *c.first_year;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (variables.empty()) throw ConfigError("config: at least one variable is required");
  if (months.empty()) throw ConfigError("config: at least one month is required");
  if (covariates.empty()) throw ConfigError("config: at least one covariate is required");
  if (q_levels.empty()) throw ConfigError("config: at least one q level is required");
  for (int m : months) {
    if (m < 1 || m > 12) throw ConfigError("config: month " + std::to_string(m) + " outside 1..12");
  }
  for (double q : q_levels) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("config: q levels must lie in (0, 1)");
  }
  if (grid_path.empty() && maxima_path.empty()) throw ConfigError("config: set 'grid' or 'maxima' as input");
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
}

RunConfig run_config_from(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    if (auto v = kv.get("grid")) c.grid_path = resolve(base_dir, *v);
    if (auto v = kv.get("maxima")) c.maxima_path = resolve(base_dir, *v);
    if (auto v = kv.get("enso")) c.enso_path = resolve(base_dir, *v);
    if (auto v = kv.get("out")) c.out_dir = resolve(base_dir, *v);
    if (kv.has("variables")) {
      c.variables.clear();
      for (const auto& s : kv.list("variables")) c.variables.push_back(parse_variable(s));
    }
    if (kv.has("months")) c.months = kv.integer_list("months");
    if (kv.has("covariates")) {
      c.covariates.clear();
      for (const auto& s : kv.list("covariates")) c.covariates.push_back(parse_covariate(s));
    }
    if (kv.has("q")) c.q_levels = kv.number_list("q");
    c.replicates = static_cast<std::size_t>(kv.integer_or("replicates", static_cast<long long>(c.replicates)));
    c.sample_cells = static_cast<std::size_t>(kv.integer_or("sample_cells", static_cast<long long>(c.sample_cells)));
    c.workers = static_cast<int>(kv.integer_or("workers", c.workers));
    c.seed = static_cast<std::uint64_t>(kv.integer_or("seed", static_cast<long long>(c.seed)));
    c.geojson = kv.flag_or("geojson", c.geojson);
    if (kv.has("first_year")) c.first_year = static_cast<int>(kv.integer_or("first_year", 0));
    c.bounds.lon_min = static_cast<int>(kv.integer_or("lon_min", c.bounds.lon_min));
    c.bounds.lon_max = static_cast<int>(kv.integer_or("lon_max", c.bounds.lon_max));
    c.bounds.lat_min = static_cast<int>(kv.integer_or("lat_min", c.bounds.lat_min));
    c.bounds.lat_max = static_cast<int>(kv.integer_or("lat_max", c.bounds.lat_max));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw ConfigError("config: unknown key '" + unused.front() + "'");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from(KeyValueConfig::load(path), path.parent_path());
}

Dataset load_dataset(const RunConfig& config) {
  config.validate();
  Dataset data;
  if (!config.grid_path.empty()) {
    data.raw = load_grid_csv(config.grid_path, config.bounds);
    spdlog::info("loaded {} cells ({} missing in bounds) from {}", data.raw->series.size(),
                 data.raw->grid.missing.size(), config.grid_path.string());
    for (Variable v : config.variables) {
      for (const auto& s : data.raw->series) {
        for (auto& b : block_maxima(s, v)) data.maxima.push_back(std::move(b));
      }
    }
  } else {
    data.maxima = read_maxima_csv(config.maxima_path);
  }
  if (!config.enso_path.empty()) data.enso = load_enso(config.enso_path);
  if (config.first_year) {
    data.first_year = *config.first_year;
  } else {
    int first = 0;
    bool any = false;
    for (const auto& s : data.maxima) {
      for (int y : s.years) {
        if (!any || y < first) first = y;
        any = true;
      }
    }
    data.first_year = first;
  }
  return data;
}

std::vector<CellSeries> collect_cells(const Dataset& data, Variable variable, int month, Covariate covariate) {
  if (covariate == Covariate::Enso && !data.enso) {
    throw ConfigError("the ENSO covariate needs an ENSO index file ('enso')");
  }
  std::vector<CellSeries> out;
  for (const auto& s : data.maxima) {
    if (s.variable != variable || s.month != month) continue;
    CellSeries c;
    c.cell = s.cell;
    c.years = s.years;
    c.maxima = s.maxima;
    for (int y : s.years) {
      c.covariate.push_back(covariate == Covariate::Time ? static_cast<double>(y - data.first_year + 1)
                                                         : data.enso->value(y, month));
    }
    if (!s.years.empty()) {
      const auto first = std::min_element(s.years.begin(), s.years.end()) - s.years.begin();
      c.first_maximum = s.maxima[static_cast<std::size_t>(first)];
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const CellSeries& a, const CellSeries& b) { return a.cell < b.cell; });
  return out;
}

std::vector<CellOutcome> test_cells(std::span<const CellSeries> cells, Variable variable, int month,
                                    Covariate covariate, Execution exec, int workers) {
  return parallel_map(
      cells.size(),
      [&](std::size_t i) {
        CellOutcome out;
        try {
          auto fits = fit_nested(cells[i].maxima, cells[i].covariate);
          if (!fits.null_fit.converged || !fits.alt_fit.converged) {
            out.failure = "not converged";
            return out;
          }
          out.test = make_cell_test(cells[i].cell, month, variable, covariate, std::move(fits));
        } catch (const std::exception& e) {
          out.failure = e.what();
        }
        return out;
      },
      exec, workers);
}

CovariateAnalysis analyze_cells(std::span<const CellSeries> cells, Variable variable, int month, Covariate covariate,
                                std::span<const double> q_levels, Execution exec, int workers) {
  CovariateAnalysis a;
  a.label = std::string(to_string(variable));
  a.variable = variable;
  a.covariate = covariate;
  a.month = month;
  auto outcomes = test_cells(cells, variable, month, covariate, exec, workers);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].test) {
      a.tests.push_back(std::move(*outcomes[i].test));
      a.first_maxima.push_back(cells[i].first_maximum);
    } else {
      ++a.failed;
    }
  }
  if (a.failed > 0) {
    spdlog::warn("{} {} month {}: {} of {} cells failed to fit and are excluded from m", a.label,
                 to_string(covariate), month, a.failed, cells.size());
  }
  if (a.tests.empty()) return a;
  std::vector<double> p;
  p.reserve(a.tests.size());
  for (const auto& t : a.tests) p.push_back(t.pvalue);
  for (double q : q_levels) a.fdr.push_back(control_fdr(p, q));
  return a;
}

std::vector<CellSeries> residual_cells(std::span<const CellSeries> first, std::span<const CellSeries> second,
                                       std::size_t& failed, Execution exec, int workers) {
  if (first.size() != second.size()) throw std::invalid_argument("residual_cells: cell lists differ");
  const auto residuals = parallel_map(
      first.size(),
      [&](std::size_t i) -> std::optional<CellSeries> {
        const auto& a = first[i];
        const auto& b = second[i];
        if (a.cell != b.cell || a.years != b.years) return std::nullopt;
        try {
          const auto fit = fit_nested(a.maxima, a.covariate).alt_fit;
          if (!fit.converged) return std::nullopt;
          CellSeries r = b;
          for (std::size_t t = 0; t < r.maxima.size(); ++t) r.maxima[t] = a.maxima[t] - *fit.slope * a.covariate[t];
          return r;
        } catch (const std::exception&) {
          return std::nullopt;
        }
      },
      exec, workers);
  std::vector<CellSeries> out;
  failed = 0;
  for (const auto& r : residuals) {
    if (r) {
      out.push_back(*r);
    } else {
      ++failed;
    }
  }
  return out;
}

AnalysisReport run_analysis(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  const auto exec = execution_for(config.workers);
  AnalysisReport report;
  for (Variable v : config.variables) {
    for (Covariate c : config.covariates) {
      for (int m : config.months) {
        const auto cells = collect_cells(data, v, m, c);
        report.analyses.push_back(analyze_cells(cells, v, m, c, config.q_levels, exec, config.workers));
      }
    }
  }
  if (!config.out_dir.empty()) write_analysis(report, config, "");
  return report;
}

AnalysisReport run_residual_analysis(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  if (!data.enso) throw ConfigError("residual analysis needs both covariates; set 'enso'");
  const auto exec = execution_for(config.workers);
  AnalysisReport report;
  const std::array<std::pair<Covariate, Covariate>, 2> pairs{
      std::pair{Covariate::Enso, Covariate::Time}, std::pair{Covariate::Time, Covariate::Enso}};
  for (Variable v : config.variables) {
    for (const auto& [removed, tested] : pairs) {
      if (std::find(config.covariates.begin(), config.covariates.end(), tested) == config.covariates.end()) continue;
      for (int m : config.months) {
        const auto first = collect_cells(data, v, m, removed);
        const auto second = collect_cells(data, v, m, tested);
        std::size_t failed = 0;
        const auto resid = residual_cells(first, second, failed, exec, config.workers);
        auto a = analyze_cells(resid, v, m, tested, config.q_levels, exec, config.workers);
        a.label = std::string(to_string(v)) + " res.";
        a.failed += failed;
        report.analyses.push_back(std::move(a));
      }
    }
  }
  if (!config.out_dir.empty()) write_analysis(report, config, "residual_");
  return report;
}

void write_analysis(const AnalysisReport& report, const RunConfig& config, const std::string& prefix) {
  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);

  // one row per (label, covariate, q), one column per month
  std::vector<int> months = config.months;
  std::sort(months.begin(), months.end());
  months.erase(std::unique(months.begin(), months.end()), months.end());
  std::map<std::tuple<std::string, std::string, double>, std::map<int, std::size_t>> table;
  std::vector<std::tuple<std::string, std::string, double>> row_order;
  for (const auto& a : report.analyses) {
    for (const auto& f : a.fdr) {
      const auto key = std::make_tuple(a.label, std::string(to_string(a.covariate)), f.q);
      if (!table.contains(key)) row_order.push_back(key);
      table[key][a.month] = f.rejections;
    }
  }
  {
    auto out = open_for_write(dir / (prefix + "counts.csv"));
    out << "variable,covariate,q";
    for (int m : months) out << ',' << kMonthNames[static_cast<std::size_t>(m - 1)];
    out << '\n';
    for (const auto& key : row_order) {
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << format_double(std::get<2>(key));
      const auto& row = table[key];
      for (int m : months) {
        out << ',';
        if (const auto it = row.find(m); it != row.end()) out << it->second;
      }
      out << '\n';
    }
  }
  {
    auto out = open_for_write(dir / (prefix + "fdr_summary.csv"));
    out << "variable,covariate,month,q,m,failed,k,S_q,q_lim,bound_basic,bound_iterated\n";
    for (const auto& a : report.analyses) {
      for (const auto& f : a.fdr) {
        out << a.label << ',' << to_string(a.covariate) << ',' << a.month << ',' << format_double(f.q) << ',' << f.m
            << ',' << a.failed << ',' << f.k << ',' << f.rejections << ',' << format_double(f.q_lim) << ','
            << f.bound_basic << ',' << f.bound_iterated << '\n';
      }
    }
  }

  nlohmann::json manifest;
  manifest["tool"] = "gevtrend";
  manifest["version"] = kVersion;
  manifest["config"] = config_json(config);
  manifest["analyses"] = nlohmann::json::array();

  for (const auto& a : report.analyses) {
    const std::string stem =
        prefix + "map_" + file_label(a) + "_" + std::string(to_string(a.covariate)) + "_" + two_digits(a.month);
    {
      auto out = open_for_write(dir / "maps" / (stem + ".csv"));
      out << "lon,lat,slope,tstat,pvalue";
      for (const auto& f : a.fdr) out << ",sig_q" << q_tag(f.q);
      out << ",slope_pct_of_first_max\n";
      for (std::size_t i = 0; i < a.tests.size(); ++i) {
        const auto& t = a.tests[i];
        out << t.cell.lon << ',' << t.cell.lat << ',' << format_double(t.slope) << ',' << format_double(t.tstat) << ','
            << format_double(t.pvalue);
        for (const auto& f : a.fdr) out << ',' << (f.rejected[i] ? 1 : 0);
        out << ',';
        if (a.first_maxima[i] != 0.0) out << format_double(100.0 * t.slope / std::abs(a.first_maxima[i]));
        out << '\n';
      }
    }
    if (config.geojson) {
      nlohmann::json fc;
      fc["type"] = "FeatureCollection";
      fc["features"] = nlohmann::json::array();
      for (std::size_t i = 0; i < a.tests.size(); ++i) {
        const auto& t = a.tests[i];
        const double x = t.cell.lon, y = t.cell.lat;
        nlohmann::json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "Polygon"},
                               {"coordinates", {{{x, y}, {x + 1, y}, {x + 1, y + 1}, {x, y + 1}, {x, y}}}}};
        nlohmann::json props{{"lon", t.cell.lon}, {"lat", t.cell.lat}, {"slope", t.slope},
                             {"tstat", t.tstat},  {"pvalue", t.pvalue}};
        for (const auto& f : a.fdr) props["sig_q" + q_tag(f.q)] = f.rejected[i];
        feature["properties"] = props;
        fc["features"].push_back(feature);
      }
      auto out = open_for_write(dir / "maps" / (stem + ".geojson"));
      out << fc.dump(1) << '\n';
    }
    nlohmann::json entry{{"variable", a.label},
                         {"covariate", std::string(to_string(a.covariate))},
                         {"month", a.month},
                         {"m", a.tests.size()},
                         {"failed", a.failed}};
    manifest["analyses"].push_back(entry);
  }
  auto out = open_for_write(dir / (prefix + "manifest.json"));
  out << manifest.dump(2) << '\n';
}

GofMonthReport gof_field(std::span<const CellId> cells, std::span<const std::vector<double>> maxima,
                         std::size_t replicates, std::uint64_t seed, Execution exec, int workers) {
  if (cells.size() != maxima.size()) throw std::invalid_argument("gof_field: cells and maxima differ in size");
  GofMonthReport report;
  report.cells = cells.size();

  const auto fits = parallel_map(
      cells.size(),
      [&](std::size_t i) -> std::optional<GevFit> {
        try {
          auto f = fit_gev(maxima[i], LocationModel::stationary());
          if (f.converged) return f;
        } catch (const std::exception&) {
        }
        return std::nullopt;
      },
      exec, workers);

  // the envelope field and the observed sweep both use the cells with a usable in-sample fit
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    GofCellRow row;
    row.cell = cells[i];
    row.n = maxima[i].size();
    if (fits[i] && maxima[i].size() >= kMinKsSample) {
      row.in_sample = ks_test(maxima[i], fits[i]->params);
      if (row.in_sample->rejected_at_5pct) ++report.in_sample_rejections;
      usable.push_back(i);
    }
    report.rows.push_back(std::move(row));
  }
  std::vector<CellId> field_cells;
  std::vector<std::vector<double>> field_maxima;
  std::vector<GevParams> field_params;
  std::vector<std::size_t> sizes;
  for (std::size_t i : usable) {
    field_cells.push_back(cells[i]);
    field_maxima.push_back(maxima[i]);
    field_params.push_back(fits[i]->params);
    sizes.push_back(maxima[i].size());
  }
  const auto neighbors = nearest_neighbors(field_cells);
  const auto sweep = out_sample_sweep(field_maxima, neighbors, exec, workers);
  for (std::size_t k = 0; k < usable.size(); ++k) report.rows[usable[k]].out_sample = sweep.results[k];
  report.observed = sweep.rejections;
  report.tested = sweep.tested;
  if (!field_cells.empty()) {
    report.envelope = simulate_envelope(field_params, sizes, neighbors, replicates, seed, exec, workers);
  }
  return report;
}

GofReport run_gof(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  const auto exec = execution_for(config.workers);
  GofReport report;
  for (Variable v : config.variables) {
    for (int m : config.months) {
      const auto cells = collect_cells(data, v, m, Covariate::Time);
      std::vector<CellId> ids;
      std::vector<std::vector<double>> maxima;
      for (const auto& c : cells) {
        ids.push_back(c.cell);
        maxima.push_back(c.maxima);
      }
      const auto seed = derived_seed(config.seed, {static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(m)});
      auto month = gof_field(ids, maxima, config.replicates, seed, exec, config.workers);
      month.variable = v;
      month.month = m;
      spdlog::info("{} month {}: {} out-sample rejections, envelope [{}, {}]", to_string(v), m, month.observed,
                   month.envelope.q05, month.envelope.q95);
      report.months.push_back(std::move(month));
    }
  }
  if (config.out_dir.empty()) return report;

  auto table = open_for_write(config.out_dir / "table1.csv");
  table << "variable,month,observed,q05,q95\n";
  for (const auto& m : report.months) {
    table << to_string(m.variable) << ',' << m.month << ',' << m.observed << ',' << format_double(m.envelope.q05) << ','
          << format_double(m.envelope.q95) << '\n';
    auto cells = open_for_write(config.out_dir / "gof" /
                                ("gof_" + std::string(to_string(m.variable)) + "_" + two_digits(m.month) + ".csv"));
    cells << "lon,lat,n,insample_D,insample_p,outsample_D,outsample_p,outsample_rejected,status\n";
    for (const auto& r : m.rows) {
      cells << r.cell.lon << ',' << r.cell.lat << ',' << r.n << ',';
      if (r.in_sample) cells << format_double(r.in_sample->statistic) << ',' << format_double(r.in_sample->pvalue);
      else cells << ',';
      const bool tested = r.out_sample.status == OutSampleStatus::Tested;
      cells << ',';
      if (tested) cells << format_double(r.out_sample.ks.statistic) << ',' << format_double(r.out_sample.ks.pvalue);
      else cells << ',';
      cells << ',' << (tested && r.out_sample.ks.rejected_at_5pct ? 1 : 0) << ',';
      switch (r.out_sample.status) {
        case OutSampleStatus::Tested: cells << "tested"; break;
        case OutSampleStatus::TooFewNeighbors: cells << "too_few_neighbors"; break;
        case OutSampleStatus::TargetTooShort: cells << "target_too_short"; break;
        case OutSampleStatus::FitFailed: cells << "fit_failed"; break;
      }
      cells << '\n';
    }
  }
  return report;
}

DiagnosticsReport run_diagnostics(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  if (!data.raw) throw ConfigError("diagnostics need the raw 3-hourly grid ('grid')");
  const auto exec = execution_for(config.workers);
  const std::set<int> months(config.months.begin(), config.months.end());
  DiagnosticsReport report;
  for (Variable v : config.variables) {
    std::vector<std::vector<ValueBlock>> per_cell;
    for (const auto& s : data.raw->series) {
      auto blocks = value_blocks(s, v);
      std::erase_if(blocks, [&](const ValueBlock& b) { return !months.contains(b.month); });
      per_cell.push_back(std::move(blocks));
    }
    auto summary = screen_blocks(per_cell, config.sample_cells,
                                 derived_seed(config.seed, {static_cast<std::uint64_t>(v)}), kDefaultLags, exec,
                                 config.workers);
    report.summaries.emplace_back(v, std::move(summary));
  }
  if (config.out_dir.empty()) return report;

  auto summary_out = open_for_write(config.out_dir / "diagnostics_summary.csv");
  summary_out << "variable,cells,blocks,skipped_blocks,rejection_fraction,raw_rejection_fraction\n";
  for (const auto& [v, s] : report.summaries) {
    summary_out << to_string(v) << ',' << s.cells << ',' << s.blocks.size() << ',' << s.skipped_blocks << ','
                << format_double(s.rejection_fraction) << ',' << format_double(s.raw_rejection_fraction) << '\n';
    auto out = open_for_write(config.out_dir / ("diagnostics_" + std::string(to_string(v)) + ".csv"));
    out << "cell,month,year,p,q,aic,Q,pvalue\n";
    for (const auto& d : s.blocks) {
      out << cell_label(d.cell) << ',' << d.month << ',' << d.year << ',' << d.p << ',' << d.q << ','
          << format_double(d.aic) << ',' << format_double(d.box_pierce_q) << ',' << format_double(d.bp_pvalue) << '\n';
    }
  }
  return report;
}

}  // namespace gevtrend
