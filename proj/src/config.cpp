#include "gevtrend/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gevtrend/dataio.hpp"

namespace gevtrend {
namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trimmed(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trimmed(line.substr(eq + 1));
  }
  return cfg;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_[key] = true;
  return it->second;
}

std::string KeyValueConfig::string_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::number_or(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + *v + "'");
  }
}

long long KeyValueConfig::integer_or(const std::string& key, long long fallback) const {
  const auto v = get(key);
  return v ? to_integer(key, *v) : fallback;
}

bool KeyValueConfig::flag_or(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  const auto v = get(key);
  if (!v) return out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> KeyValueConfig::integer_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : list(key)) {
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const auto lo = to_integer(key, trimmed(item.substr(0, dash)));
      const auto hi = to_integer(key, trimmed(item.substr(dash + 1)));
      if (hi < lo) throw std::invalid_argument("config: '" + key + "' has an empty range " + item);
      for (auto i = lo; i <= hi; ++i) out.push_back(static_cast<int>(i));
    } else {
      out.push_back(static_cast<int>(to_integer(key, item)));
    }
  }
  return out;
}

std::vector<double> KeyValueConfig::number_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    try {
      out.push_back(parse_double(item));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config: '" + key + "' expects numbers, got '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.contains(k)) out.push_back(k);
  }
  return out;
}

}  // namespace gevtrend
