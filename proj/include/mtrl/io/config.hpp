#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace mtrl::io {

/// Flat `key = value` configuration. Blank lines and `#` comments are ignored.
///
/// Typed getters record which keys were read so callers can reject typos via
/// unused(). Keys prefixed `run.` are informational (written into run
/// manifests) and never reported as unused.
class KeyValues {
 public:
  KeyValues() = default;
  explicit KeyValues(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  /// Throws ConfigError on lines without '=' or duplicate keys.
  static KeyValues parse(std::string_view text, std::string_view source = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  std::set<std::string> unused() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Sorted `key = value` lines; parse(to_text()) reproduces the entries.
  std::string to_text() const;

 private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace mtrl::io
