#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace qsuggest::config {

using Value = std::variant<std::string, std::int64_t, double, bool>;

// Flat key/value document. Keys inside a [section] are stored as
// "section.key".
class Document {
 public:
  // Reads `key = value` lines with optional [section] headers and # comments.
  // Values: "double-quoted strings" (with \" \\ \n \t escapes), integers,
  // decimals, true/false. This is the subset of TOML our config files use.
  static Document parse_toml(std::string_view source, const std::string& origin = "<config>");

  // Nested objects are flattened with '.'.
  static Document parse_json(std::string_view source, const std::string& origin = "<config>");

  // Chooses the parser from the file extension (.json, otherwise TOML).
  static Document load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, std::string fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Relative paths in a config file resolve against the file's directory.
  std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

 private:
  std::map<std::string, Value> values_;
  std::string origin_;
  std::filesystem::path base_dir_;
};

}  // namespace qsuggest::config
