#include "mtrl/io/config.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "mtrl/errors.hpp"
#include "mtrl/io/text.hpp"

namespace mtrl::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, std::string_view source) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!kv.entries_.emplace(key, value).second) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    }
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(text, path.string());
}

const std::string* KeyValues::lookup(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto* v = lookup(key);
  return v ? parse_double(*v, key) : fallback;
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
  const auto* v = lookup(key);
  return v ? parse_int(*v, key) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError(key + ": '" + *v + "' is not a boolean");
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

std::set<std::string> KeyValues::unused() const {
  std::set<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (used_.count(k) == 0 && k.rfind("run.", 0) != 0) out.insert(k);
  }
  return out;
}

std::string KeyValues::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace mtrl::io
