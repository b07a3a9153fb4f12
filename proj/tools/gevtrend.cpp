// Command-line front end: analyze, residual, gof, diagnose, synth.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gevtrend/pipeline.hpp"
#include "gevtrend/synth.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string grid, maxima, enso, out, months, variables, covariates;
  std::vector<double> q;
  long long seed = -1;
  int workers = -1;
  long long replicates = -1;
  long long sample_cells = -1;
  bool geojson = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--grid", o.grid, "raw 3-hourly grid CSV (lon,lat,timestamp,cape,srh)");
  cmd->add_option("--maxima", o.maxima, "block-maxima CSV (lon,lat,variable,month,year,maximum,n_obs)");
  cmd->add_option("--enso", o.enso, "ENSO index file (year month value)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--months", o.months, "months, e.g. 4,5 or 1-12");
  cmd->add_option("--variables", o.variables, "subset of PROD,CAPE,SRH");
  cmd->add_option("--covariates", o.covariates, "subset of time,enso");
  cmd->add_option("--q", o.q, "FDR levels")->delimiter(',');
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--workers", o.workers, "worker threads (1 = serial)");
  cmd->add_option("--replicates", o.replicates, "envelope replicates");
  cmd->add_option("--sample-cells", o.sample_cells, "cells sampled by diagnose");
  cmd->add_flag("--geojson", o.geojson, "also write GeoJSON maps");
}

gevtrend::RunConfig build_config(const Overrides& o) {
  gevtrend::KeyValueConfig kv;
  std::filesystem::path base;
  if (!o.config.empty()) {
    kv = gevtrend::KeyValueConfig::load(o.config);
    base = std::filesystem::path(o.config).parent_path();
  }
  auto cwd_path = [](const std::string& p) { return std::filesystem::absolute(p).string(); };
  if (!o.grid.empty()) kv.set("grid", cwd_path(o.grid));
  if (!o.maxima.empty()) kv.set("maxima", cwd_path(o.maxima));
  if (!o.enso.empty()) kv.set("enso", cwd_path(o.enso));
  if (!o.out.empty()) kv.set("out", cwd_path(o.out));
  if (!o.months.empty()) kv.set("months", o.months);
  if (!o.variables.empty()) kv.set("variables", o.variables);
  if (!o.covariates.empty()) kv.set("covariates", o.covariates);
  if (!o.q.empty()) {
    std::ostringstream s;
    for (std::size_t i = 0; i < o.q.size(); ++i) s << (i ? "," : "") << gevtrend::format_double(o.q[i]);
    kv.set("q", s.str());
  }
  if (o.seed >= 0) kv.set("seed", std::to_string(o.seed));
  if (o.workers >= 0) kv.set("workers", std::to_string(o.workers));
  if (o.replicates >= 0) kv.set("replicates", std::to_string(o.replicates));
  if (o.sample_cells >= 0) kv.set("sample_cells", std::to_string(o.sample_cells));
  if (o.geojson) kv.set("geojson", "true");
  auto config = gevtrend::run_config_from(kv, base);
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate effects in gridded block maxima: GEV fits, signed LRTs and FDR control"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  Overrides analyze, residual, gof, diagnose;
  add_run_options(app.add_subcommand("analyze", "trend / ENSO tests with BH control per month"), analyze);
  add_run_options(app.add_subcommand("residual", "test one covariate on residual maxima of the other"), residual);
  add_run_options(app.add_subcommand("gof", "in-sample and pooled-neighbor KS tests with simulated envelope"), gof);
  add_run_options(app.add_subcommand("diagnose", "within-block ARMA / Box-Pierce screening"), diagnose);

  std::string synth_config, synth_out = "synth";
  int synth_workers = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic maxima field (and optional raw grid)");
  synth->add_option("--config", synth_config, "synthetic field description")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--workers", synth_workers, "worker threads (1 = serial)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (app.got_subcommand("analyze")) {
      const auto report = gevtrend::run_analysis(build_config(analyze));
      spdlog::info("{} analyses written", report.analyses.size());
    } else if (app.got_subcommand("residual")) {
      const auto report = gevtrend::run_residual_analysis(build_config(residual));
      spdlog::info("{} residual analyses written", report.analyses.size());
    } else if (app.got_subcommand("gof")) {
      gevtrend::run_gof(build_config(gof));
    } else if (app.got_subcommand("diagnose")) {
      const auto report = gevtrend::run_diagnostics(build_config(diagnose));
      for (const auto& [v, s] : report.summaries) {
        spdlog::info("{}: {} blocks at {} cells, {:.3f} rejected after ARMA, {:.3f} raw", gevtrend::to_string(v),
                     s.blocks.size(), s.cells, s.rejection_fraction, s.raw_rejection_fraction);
      }
    } else if (app.got_subcommand("synth")) {
      const auto config = gevtrend::load_synth_config(synth_config);
      gevtrend::write_synthetic_field(config, synth_out, gevtrend::execution_for(synth_workers), synth_workers);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
