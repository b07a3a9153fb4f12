#include "gevtrend/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace gevtrend {
namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_grid_coordinate(std::string_view s, int& out) {
  if (parse_int(s, out)) return true;
  double d = 0.0;
  try {
    d = parse_double(s);
  } catch (const std::invalid_argument&) {
    return false;
  }
  if (d != std::floor(d)) return false;
  out = static_cast<int>(d);
  return true;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::Io, "cannot write " + path.string());
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line) + ": ";
}

struct YearMonth {
  int year;
  int month;
};

YearMonth year_month_of(std::int64_t seconds) {
  const auto day = std::chrono::floor<days>(std::chrono::sys_seconds{std::chrono::seconds{seconds}});
  const year_month_day ymd{day};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

/// Observations grouped by (month, year), in time order.
std::map<std::pair<int, int>, std::vector<double>> group_blocks(const RawSeries& raw, Variable variable) {
  std::map<std::pair<int, int>, std::vector<double>> blocks;
  for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
    const auto ym = year_month_of(raw.timestamps[i]);
    blocks[{ym.month, ym.year}].push_back(variable_value(variable, raw.cape[i], raw.srh[i]));
  }
  return blocks;
}

bool block_complete_enough(int year, int month, std::size_t present) {
  const auto expected = static_cast<double>(days_in_month(year, month) * kObservationsPerDay);
  return static_cast<double>(present) >= (1.0 - kMaxMissingFraction) * expected;
}

}  // namespace

double derive_prod(double cape, double srh) {
  if (!(cape >= 0.0)) throw std::domain_error("derive_prod: CAPE must be non-negative");
  return std::sqrt(cape) * srh;
}

double variable_value(Variable v, double cape, double srh) {
  switch (v) {
    case Variable::Prod: return derive_prod(cape, srh);
    case Variable::Cape: return cape;
    case Variable::Srh: return srh;
  }
  return 0.0;
}

std::int64_t parse_timestamp(std::string_view iso) {
  iso = trim(iso);
  // YYYY-MM-DDTHH:MM:SSZ
  if (iso.size() != 20 || iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' || iso[13] != ':' || iso[16] != ':' ||
      iso[19] != 'Z') {
    throw std::invalid_argument("timestamp '" + std::string(iso) + "' is not YYYY-MM-DDTHH:MM:SSZ");
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(iso.substr(0, 4), y) || !parse_int(iso.substr(5, 2), mo) || !parse_int(iso.substr(8, 2), d) ||
      !parse_int(iso.substr(11, 2), h) || !parse_int(iso.substr(14, 2), mi) || !parse_int(iso.substr(17, 2), s)) {
    throw std::invalid_argument("timestamp '" + std::string(iso) + "' has non-numeric fields");
  }
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw std::invalid_argument("timestamp '" + std::string(iso) + "' is not a valid date-time");
  }
  return std::chrono::sys_seconds{sys_days{ymd}}.time_since_epoch().count() + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(std::int64_t seconds) {
  const auto tp = std::chrono::sys_seconds{std::chrono::seconds{seconds}};
  const auto day = std::chrono::floor<days>(tp);
  const year_month_day ymd{day};
  const auto sec = (tp - day).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(sec / 3600), static_cast<long long>(sec / 60 % 60),
                static_cast<long long>(sec % 60));
  return buf;
}

int days_in_month(int year, int month) {
  const std::chrono::year_month_day_last last{std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} /
                                              std::chrono::last};
  return static_cast<int>(static_cast<unsigned>(last.day()));
}

std::vector<BlockMaximaSeries> block_maxima(const RawSeries& raw, Variable variable) {
  std::map<int, BlockMaximaSeries> by_month;
  for (const auto& [key, values] : group_blocks(raw, variable)) {
    const auto [month, year] = key;
    if (!block_complete_enough(year, month, values.size())) {
      spdlog::warn("cell {} {}-{:02d}: {} of {} observations present, block dropped", cell_label(raw.cell), year,
                   month, values.size(), days_in_month(year, month) * kObservationsPerDay);
      continue;
    }
    auto& s = by_month[month];
    s.cell = raw.cell;
    s.variable = variable;
    s.month = month;
    s.years.push_back(year);
    s.maxima.push_back(*std::max_element(values.begin(), values.end()));
    s.n_obs.push_back(static_cast<int>(values.size()));
  }
  std::vector<BlockMaximaSeries> out;
  for (auto& [month, s] : by_month) out.push_back(std::move(s));
  return out;
}

std::vector<ValueBlock> value_blocks(const RawSeries& raw, Variable variable) {
  std::vector<ValueBlock> out;
  for (auto& [key, values] : group_blocks(raw, variable)) {
    if (!block_complete_enough(key.second, key.first, values.size())) continue;
    out.push_back(ValueBlock{raw.cell, key.first, key.second, std::move(values)});
  }
  return out;
}

GridData load_grid_csv(const std::filesystem::path& path, const GridSpec& bounds) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "lon,lat,timestamp,cape,srh") {
    throw DataError(DataError::Kind::Malformed, where(path, 1) + "expected header 'lon,lat,timestamp,cape,srh'");
  }
  struct Row {
    std::int64_t ts;
    double cape;
    double srh;
    std::size_t line;
  };
  std::map<CellId, std::vector<Row>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + "expected 5 fields, found " +
                                                      std::to_string(f.size()));
    }
    CellId cell;
    if (!parse_grid_coordinate(f[0], cell.lon) || !parse_grid_coordinate(f[1], cell.lat)) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + "lon/lat must be whole degrees");
    }
    if (!bounds.contains(cell)) {
      throw DataError(DataError::Kind::OutOfGrid, where(path, lineno) + "cell " + cell_label(cell) +
                                                      " lies outside the grid bounds");
    }
    Row r{};
    r.line = lineno;
    try {
      r.ts = parse_timestamp(f[2]);
      r.cape = parse_double(f[3]);
      r.srh = parse_double(f[4]);
    } catch (const std::invalid_argument& e) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + e.what());
    }
    if (!std::isfinite(r.cape) || !std::isfinite(r.srh) || r.cape < 0.0) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + "CAPE must be finite and >= 0, SRH finite");
    }
    // tolerate clock jitter of up to a minute around the 3-hourly slots
    const std::int64_t offset = ((r.ts % kStepSeconds) + kStepSeconds) % kStepSeconds;
    if (offset > 60 && offset < kStepSeconds - 60) {
      throw DataError(DataError::Kind::IrregularSpacing, where(path, lineno) + "timestamp " +
                                                             std::string(trim(f[2])) + " is off the 3-hourly grid");
    }
    r.ts = offset <= 60 ? r.ts - offset : r.ts + (kStepSeconds - offset);
    rows[cell].push_back(r);
  }

  GridData data;
  data.grid = bounds;
  data.grid.missing.clear();
  for (auto& [cell, rs] : rows) {
    std::stable_sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    RawSeries s;
    s.cell = cell;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      if (i > 0 && rs[i].ts == rs[i - 1].ts) {
        throw DataError(DataError::Kind::Duplicate, where(path, rs[i].line) + "duplicate record for cell " +
                                                        cell_label(cell) + " at " + format_timestamp(rs[i].ts));
      }
      s.timestamps.push_back(rs[i].ts);
      s.cape.push_back(rs[i].cape);
      s.srh.push_back(rs[i].srh);
    }
    data.series.push_back(std::move(s));
  }
  for (int lon = bounds.lon_min; lon <= bounds.lon_max; ++lon) {
    for (int lat = bounds.lat_min; lat <= bounds.lat_max; ++lat) {
      if (!rows.contains(CellId{lon, lat})) data.grid.missing.push_back(CellId{lon, lat});
    }
  }
  return data;
}

void write_grid_csv(const std::filesystem::path& path, std::span<const RawSeries> series) {
  auto out = open_output(path);
  out << "lon,lat,timestamp,cape,srh\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
      out << s.cell.lon << ',' << s.cell.lat << ',' << format_timestamp(s.timestamps[i]) << ','
          << format_double(s.cape[i]) << ',' << format_double(s.srh[i]) << '\n';
    }
  }
}

void write_maxima_csv(const std::filesystem::path& path, std::span<const BlockMaximaSeries> series) {
  auto out = open_output(path);
  out << "lon,lat,variable,month,year,maximum,n_obs\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.years.size(); ++i) {
      out << s.cell.lon << ',' << s.cell.lat << ',' << to_string(s.variable) << ',' << s.month << ',' << s.years[i]
          << ',' << format_double(s.maxima[i]) << ',' << s.n_obs[i] << '\n';
    }
  }
}

std::vector<BlockMaximaSeries> read_maxima_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "lon,lat,variable,month,year,maximum,n_obs") {
    throw DataError(DataError::Kind::Malformed,
                    where(path, 1) + "expected header 'lon,lat,variable,month,year,maximum,n_obs'");
  }
  std::vector<BlockMaximaSeries> out;
  std::map<std::tuple<CellId, Variable, int>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw DataError(DataError::Kind::Malformed, where(path, lineno) + "expected 7 fields");
    CellId cell;
    int month = 0, year = 0, n_obs = 0;
    double maximum = 0.0;
    Variable variable{};
    try {
      if (!parse_grid_coordinate(f[0], cell.lon) || !parse_grid_coordinate(f[1], cell.lat) ||
          !parse_int(f[3], month) || !parse_int(f[4], year) || !parse_int(f[6], n_obs)) {
        throw std::invalid_argument("non-numeric field");
      }
      variable = parse_variable(trim(f[2]));
      maximum = parse_double(f[5]);
    } catch (const std::invalid_argument& e) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + e.what());
    }
    if (month < 1 || month > 12) throw DataError(DataError::Kind::Malformed, where(path, lineno) + "month out of range");
    const auto key = std::make_tuple(cell, variable, month);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(BlockMaximaSeries{cell, variable, month, {}, {}, {}});
    }
    auto& s = out[it->second];
    if (std::find(s.years.begin(), s.years.end(), year) != s.years.end()) {
      throw DataError(DataError::Kind::Duplicate, where(path, lineno) + "duplicate maximum for cell " +
                                                      cell_label(cell) + " year " + std::to_string(year));
    }
    s.years.push_back(year);
    s.maxima.push_back(maximum);
    s.n_obs.push_back(n_obs);
  }
  return out;
}

void EnsoIndex::add(int year, int month, double value) {
  if (month < 1 || month > 12) throw std::invalid_argument("EnsoIndex: month out of range");
  if (!values_.emplace(std::make_pair(year, month), value).second) {
    throw DataError(DataError::Kind::Duplicate,
                    "duplicate ENSO value for " + std::to_string(year) + "-" + std::to_string(month));
  }
}

double EnsoIndex::value(int year, int month) const {
  const auto it = values_.find({year, month});
  if (it == values_.end()) {
    throw DataError(DataError::Kind::MissingValue,
                    "ENSO index has no value for " + std::to_string(year) + "-" + std::to_string(month));
  }
  return it->second;
}

EnsoIndex load_enso(const std::filesystem::path& path) {
  auto in = open_input(path);
  EnsoIndex index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields{std::string(t)};
    std::string ys, ms, vs, extra;
    if (!(fields >> ys >> ms >> vs) || (fields >> extra)) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + "expected 'year month value'");
    }
    int year = 0, month = 0;
    double value = 0.0;
    try {
      if (!parse_int(ys, year) || !parse_int(ms, month)) throw std::invalid_argument("non-integer year or month");
      value = parse_double(vs);
    } catch (const std::invalid_argument& e) {
      throw DataError(DataError::Kind::Malformed, where(path, lineno) + e.what());
    }
    if (month < 1 || month > 12) throw DataError(DataError::Kind::Malformed, where(path, lineno) + "month out of range");
    try {
      index.add(year, month, value);
    } catch (const DataError& e) {
      throw DataError(e.kind(), where(path, lineno) + e.what());
    }
  }
  return index;
}

void write_enso(const std::filesystem::path& path, const EnsoIndex& index) {
  auto out = open_output(path);
  for (const auto& [key, value] : index.entries()) {
    out << key.first << ' ' << key.second << ' ' << format_double(value) << '\n';
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("'" + std::string(s) + "' is not a number");
  }
  return v;
}

}  // namespace gevtrend
