#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gevtrend {

/// Plain-text `key = value` settings; '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;

  std::string string_or(const std::string& key, const std::string& fallback) const;
  double number_or(const std::string& key, double fallback) const;
  long long integer_or(const std::string& key, long long fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;
  /// Comma-separated list; integer ranges such as 4-6 are expanded by integer_list.
  std::vector<std::string> list(const std::string& key) const;
  std::vector<int> integer_list(const std::string& key) const;
  std::vector<double> number_list(const std::string& key) const;

  /// Keys that were never read through one of the accessors.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

}  // namespace gevtrend
