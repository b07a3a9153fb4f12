#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gevtrend/config.hpp"
#include "gevtrend/dataio.hpp"
#include "gevtrend/diagnostics.hpp"
#include "gevtrend/fdr.hpp"
#include "gevtrend/gof.hpp"
#include "gevtrend/inference.hpp"
#include "gevtrend/parallel.hpp"

namespace gevtrend {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::filesystem::path grid_path;    // raw 3-hourly CSV
  std::filesystem::path maxima_path;  // block-maxima interchange CSV (alternative to grid_path)
  std::filesystem::path enso_path;
  GridSpec bounds;
  std::vector<Variable> variables{Variable::Prod, Variable::Cape, Variable::Srh};
  std::vector<int> months{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<Covariate> covariates{Covariate::Time, Covariate::Enso};
  std::vector<double> q_levels{0.05, 0.2};
  std::size_t replicates = 100;
  std::size_t sample_cells = 50;
  int workers = 0;  // 0: OpenMP default, 1: serial
  std::uint64_t seed = 1;
  std::optional<int> first_year;  // year with t = 1; defaults to the earliest year in the data
  std::filesystem::path out_dir = "out";
  bool geojson = false;

  /// Throws ConfigError on empty variable/month/covariate sets, q outside (0, 1),
  /// months outside 1..12 or a missing input path.
  void validate() const;
};

/// Applies recognised keys of a key=value file on top of the defaults. Relative
/// paths are resolved against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from(const KeyValueConfig& kv, const std::filesystem::path& base_dir = {});

struct Dataset {
  std::vector<BlockMaximaSeries> maxima;
  std::optional<EnsoIndex> enso;
  std::optional<GridData> raw;
  int first_year = 0;
};

Dataset load_dataset(const RunConfig& config);

/// Maxima of one cell with the aligned covariate values.
struct CellSeries {
  CellId cell;
  std::vector<int> years;
  std::vector<double> maxima;
  std::vector<double> covariate;
  double first_maximum = 0.0;  // maximum of the earliest year, for percent-normalised slopes
};

/// Cells of (variable, month) with covariate values attached, sorted by cell.
/// Throws DataError(MissingValue) when an ENSO value is needed but absent.
std::vector<CellSeries> collect_cells(const Dataset& data, Variable variable, int month, Covariate covariate);

struct CellOutcome {
  std::optional<CellTestResult> test;  // empty when a fit failed
  std::string failure;
};

/// Nested fits and signed-LRT tests for every cell (the per-cell kernel).
std::vector<CellOutcome> test_cells(std::span<const CellSeries> cells, Variable variable, int month, Covariate covariate,
                                    Execution exec = Execution::Parallel, int workers = 0);

struct CovariateAnalysis {
  std::string label;  // variable name, with " res." for residual analyses
  Variable variable = Variable::Prod;
  Covariate covariate = Covariate::Time;
  int month = 0;
  std::vector<CellTestResult> tests;  // converged cells, sorted by cell
  std::vector<double> first_maxima;   // aligned with tests
  std::size_t failed = 0;
  std::vector<FdrOutcome> fdr;  // one per q level
};

CovariateAnalysis analyze_cells(std::span<const CellSeries> cells, Variable variable, int month, Covariate covariate,
                                std::span<const double> q_levels, Execution exec = Execution::Parallel,
                                int workers = 0);

struct AnalysisReport {
  std::vector<CovariateAnalysis> analyses;
};

/// Location-shift residuals m_t - slope * x_t of the covariate fit, with the covariate
/// of the second model attached. Cells whose first fit fails are dropped and counted.
std::vector<CellSeries> residual_cells(std::span<const CellSeries> first, std::span<const CellSeries> second,
                                       std::size_t& failed, Execution exec = Execution::Parallel, int workers = 0);

AnalysisReport run_analysis(const RunConfig& config);
AnalysisReport run_residual_analysis(const RunConfig& config);

/// Writes counts.csv, fdr_summary.csv, maps/ and manifest.json under config.out_dir,
/// with file names prefixed by prefix.
void write_analysis(const AnalysisReport& report, const RunConfig& config, const std::string& prefix);

struct GofCellRow {
  CellId cell;
  std::size_t n = 0;
  std::optional<KsResult> in_sample;
  OutSampleResult out_sample;
};

struct GofMonthReport {
  Variable variable = Variable::Prod;
  int month = 0;
  std::size_t cells = 0;
  std::size_t in_sample_rejections = 0;
  std::size_t observed = 0;  // out-sample rejections on the data
  std::size_t tested = 0;
  Envelope envelope;
  std::vector<GofCellRow> rows;
};

struct GofReport {
  std::vector<GofMonthReport> months;
};

/// In-sample and pooled-neighbor KS tests over a field, plus the simulated envelope.
GofMonthReport gof_field(std::span<const CellId> cells, std::span<const std::vector<double>> maxima,
                         std::size_t replicates, std::uint64_t seed, Execution exec = Execution::Parallel,
                         int workers = 0);

GofReport run_gof(const RunConfig& config);

struct DiagnosticsReport {
  std::vector<std::pair<Variable, ScreenSummary>> summaries;
};

DiagnosticsReport run_diagnostics(const RunConfig& config);

}  // namespace gevtrend
