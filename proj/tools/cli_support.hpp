#pragma once

// Configuration reading, CSV output and run manifests for the bgq command line.

#include <charconv>
#include <chrono>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bgq/errors.hpp"
#include "bgq/version.hpp"

namespace bgq::cli {

using json = nlohmann::json;

// Exit codes
inline constexpr int kOk = 0, kConfigError = 2, kNumericalFailure = 3, kResourceCap = 4;

// Configuration problem located by a JSON pointer.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& msg)
      : std::runtime_error(msg + " at " + (pointer.empty() ? std::string("/") : pointer)), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

inline std::string pointer_escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Typed access to one JSON object; finish() rejects keys that were never read.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError(ptr_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string path(const std::string& key) const { return ptr_ + "/" + pointer_escape(key); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), path(key));
  }
  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(path(key), "missing required key");
    return convert<T>(j_.at(key), path(key));
  }
  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(path(key), "missing required key");
    return j_.at(key);
  }
  ConfigReader child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(path(key), "missing required object");
    return ConfigReader(j_.at(key), path(key));
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where, "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(where, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where, "expected a string");
      } else if constexpr (std::is_same_v<T, std::complex<double>>) {
        if (v.is_number()) return {v.get<double>(), 0.0};
        if (!(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()))
          throw ConfigError(where, "expected a number or [re, im]");
        return {v[0].get<double>(), v[1].get<double>()};
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<double>(v[i], where + "/" + std::to_string(i)));
        return out;
      }
      if constexpr (!std::is_same_v<T, std::complex<double>> && !std::is_same_v<T, std::vector<double>>) return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where, e.what());
    }
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Locale-independent shortest round-trip formatting.
inline std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header) : out_(file, std::ios::binary) {
    if (!out_) throw bgq::Error("cannot write " + file.string());
    row_strings(header);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << num(cells[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_time = 0;
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::string> artifacts;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.second) return false;
    return true;
  }
  json to_json() const {
    json j;
    j["command"] = command;
    j["version"] = bgq::kVersion;
    j["config_hash"] = "fnv1a64:" + config_hash;
    j["seed"] = seed;
    j["threads"] = threads;
    j["wall_time_s"] = wall_time;
    j["checks"] = json::array();
    for (const auto& [name, pass] : checks) j["checks"].push_back({{"name", name}, {"pass", pass}});
    j["artifacts"] = artifacts;
    return j;
  }
};

inline void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw bgq::Error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

}  // namespace bgq::cli
