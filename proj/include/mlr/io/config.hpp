#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include "mlr/error.hpp"

namespace mlr {

// A configuration problem tied to a line of a key=value file.
class ConfigError : public InvalidArgument {
public:
  ConfigError(const std::string& what, std::size_t line)
      : InvalidArgument("config line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// `key = value` per line; '#' starts a comment; blank lines are ignored.
// Keys outside `allowed` (when non-empty) and repeated keys are errors.
inline ConfigMap parse_config(std::istream& is, const std::set<std::string>& allowed = {}) {
  ConfigMap out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    if (!allowed.empty() && !allowed.count(key)) throw ConfigError("unknown key '" + key + "'", line);
    if (out.count(key)) throw ConfigError("duplicate key '" + key + "'", line);
    out[key] = {value, line};
  }
  return out;
}

inline ConfigMap parse_config_file(const std::string& path, const std::set<std::string>& allowed = {}) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config file " + path);
  return parse_config(is, allowed);
}

// Typed conversion of one entry; the whole value must be consumed.
template <class T>
T config_value(const std::string& key, const ConfigEntry& e) {
  if constexpr (std::is_same_v<T, std::string>) {
    return e.value;
  } else {
    std::istringstream ss(e.value);
    T v{};
    if (!(ss >> v)) throw ConfigError("bad value '" + e.value + "' for '" + key + "'", e.line);
    char extra;
    if (ss >> extra) throw ConfigError("trailing characters in value for '" + key + "'", e.line);
    return v;
  }
}

}  // namespace mlr
