#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gevtrend/diagnostics.hpp"
#include "gevtrend/types.hpp"

namespace gevtrend {

inline constexpr int kObservationsPerDay = 8;
inline constexpr std::int64_t kStepSeconds = 3 * 3600;
/// Blocks missing more than this fraction of their 3-hourly observations are dropped.
inline constexpr double kMaxMissingFraction = 0.10;

/// Regular 1-degree grid; cells are identified by their south-west corner.
struct GridSpec {
  int lon_min = -110;
  int lon_max = -80;
  int lat_min = 30;
  int lat_max = 50;
  std::vector<CellId> missing;  // cells inside the bounds without data, sorted

  std::size_t cell_count() const {
    return static_cast<std::size_t>(lon_max - lon_min + 1) * static_cast<std::size_t>(lat_max - lat_min + 1);
  }
  std::size_t available_count() const { return cell_count() - missing.size(); }
  bool contains(CellId c) const { return c.lon >= lon_min && c.lon <= lon_max && c.lat >= lat_min && c.lat <= lat_max; }
};

/// 3-hourly CAPE and SRH at one cell. Timestamps are UTC seconds since the epoch,
/// strictly increasing and aligned to 3-hour slots; gaps are missing observations.
struct RawSeries {
  CellId cell;
  std::vector<std::int64_t> timestamps;
  std::vector<double> cape;
  std::vector<double> srh;
};

struct GridData {
  GridSpec grid;
  std::vector<RawSeries> series;  // sorted by cell
};

struct BlockMaximaSeries {
  CellId cell;
  Variable variable = Variable::Prod;
  int month = 0;
  std::vector<int> years;
  std::vector<double> maxima;
  std::vector<int> n_obs;
};

class DataError : public std::runtime_error {
 public:
  enum class Kind { Io, Malformed, Duplicate, OutOfGrid, IrregularSpacing, MissingValue };
  DataError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// sqrt(cape) * srh in m^3 s^-3. Throws std::domain_error for negative CAPE.
double derive_prod(double cape, double srh);

double variable_value(Variable v, double cape, double srh);

std::int64_t parse_timestamp(std::string_view iso);  // "1979-01-01T00:00:00Z"
std::string format_timestamp(std::int64_t seconds);
int days_in_month(int year, int month);

/// Per-month block maxima. Blocks missing more than 10% of their observations are
/// dropped with a warning; years are in increasing order.
std::vector<BlockMaximaSeries> block_maxima(const RawSeries& raw, Variable variable);

/// The complete per-(month, year) value sequences, for within-block diagnostics.
std::vector<ValueBlock> value_blocks(const RawSeries& raw, Variable variable);

/// Reads `lon,lat,timestamp,cape,srh`. Throws DataError with a distinct kind for
/// malformed rows, duplicate (cell, timestamp) pairs, cells outside bounds and
/// timestamps off the 3-hourly grid. The missing mask is inferred from absent cells.
GridData load_grid_csv(const std::filesystem::path& path, const GridSpec& bounds = {});
void write_grid_csv(const std::filesystem::path& path, std::span<const RawSeries> series);

/// Interchange layout `lon,lat,variable,month,year,maximum,n_obs`; values round-trip bit-exactly.
void write_maxima_csv(const std::filesystem::path& path, std::span<const BlockMaximaSeries> series);
std::vector<BlockMaximaSeries> read_maxima_csv(const std::filesystem::path& path);

class EnsoIndex {
 public:
  /// Throws DataError(Duplicate) if (year, month) is already present.
  void add(int year, int month, double value);
  bool contains(int year, int month) const { return values_.contains({year, month}); }
  /// Throws DataError(MissingValue) when absent.
  double value(int year, int month) const;
  std::size_t size() const { return values_.size(); }
  const std::map<std::pair<int, int>, double>& entries() const { return values_; }

 private:
  std::map<std::pair<int, int>, double> values_;
};

/// Whitespace-separated `year month value` rows; blank lines and '#' comments are skipped.
EnsoIndex load_enso(const std::filesystem::path& path);
void write_enso(const std::filesystem::path& path, const EnsoIndex& index);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace gevtrend
