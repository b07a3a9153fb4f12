#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gevtrend/dataio.hpp"
#include "gevtrend/gevdist.hpp"
#include "gevtrend/parallel.hpp"

namespace gevtrend {

enum class CopulaKind { Independent, Exponential };

/// Synthetic block-maxima field with known covariate effects. Cells form an
/// nlon x nlat block of the 1-degree grid, indexed in CellId order.
struct SyntheticFieldSpec {
  int lon0 = -110;
  int lat0 = 30;
  int nlon = 5;
  int nlat = 5;
  int first_year = 1979;
  int years = 37;
  std::vector<int> months{4};
  Variable variable = Variable::Prod;

  GevParams base{1000.0, 300.0, 0.1};
  std::vector<GevParams> cell_params;  // per-cell override of base; empty or one per cell
  std::vector<double> time_slope;      // per cell, per year; empty means zero
  std::vector<double> enso_slope;      // per cell, per degree C; empty means zero
  std::optional<EnsoIndex> enso;       // synthesized from the seed when needed and absent

  CopulaKind copula = CopulaKind::Independent;
  double range = 2.0;  // correlation e-folding distance in cells
  std::uint64_t seed = 1;

  std::size_t cell_count() const { return static_cast<std::size_t>(nlon) * static_cast<std::size_t>(nlat); }
  std::vector<CellId> cells() const;
  const GevParams& params_at(std::size_t cell) const;
  /// Throws std::invalid_argument on inconsistent sizes or empty dimensions.
  void validate() const;
};

struct SyntheticField {
  std::vector<CellId> cells;
  std::vector<BlockMaximaSeries> series;  // month-major, cells in order within a month
  std::vector<bool> time_null;            // true where the time slope is zero
  std::vector<bool> enso_null;
  EnsoIndex enso;                         // the index used for the location (possibly synthesized)
};

/// Location at cell i in (year, month): eta0 + time_slope * t + enso_slope * ENSO, with t = year - first_year + 1.
double synthetic_location(const SyntheticFieldSpec& spec, const EnsoIndex& enso, std::size_t cell, int year, int month);

/// Independent N(0, 1) index over the spec's years and months, seeded from spec.seed.
EnsoIndex synthesize_enso(const SyntheticFieldSpec& spec);

/// Latent Gaussian vectors per (month, year), independent or exponentially correlated across
/// cells, mapped to GEV margins by the probability integral transform. Deterministic per seed
/// and independent of the worker count.
SyntheticField generate_maxima_field(const SyntheticFieldSpec& spec, Execution exec = Execution::Parallel,
                                     int workers = 0);

struct RawFieldOptions {
  double ar_phi = 0.0;  // within-block AR(1) dependence of the latent Gaussian series
};

/// 3-hourly CAPE/SRH series covering the spec's months. Each block is drawn from the
/// parent G^(1/n) of the cell's target GEV G, with n the block length, so the selected
/// variable's monthly maxima follow G exactly when ar_phi == 0.
std::vector<RawSeries> generate_raw_field(const SyntheticFieldSpec& spec, const RawFieldOptions& options = {},
                                          Execution exec = Execution::Parallel, int workers = 0);

struct SynthConfig {
  SyntheticFieldSpec spec;
  bool write_raw = false;
  RawFieldOptions raw;
};

/// Reads the plain-text key=value description of a synthetic field.
SynthConfig load_synth_config(const std::filesystem::path& path);

/// Writes maxima.csv, truth.csv and enso.txt (plus grid.csv when requested) into dir.
void write_synthetic_field(const SynthConfig& config, const std::filesystem::path& dir,
                           Execution exec = Execution::Parallel, int workers = 0);

}  // namespace gevtrend
