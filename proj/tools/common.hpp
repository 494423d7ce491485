// hybridseg CLI support: run configuration, logging, manifests.
// SPDX-License-Identifier: MIT

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridseg/version.hpp"

namespace hybridseg::cli {

// Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 no-consensus / degenerate data.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitDegenerate = 4;

inline int log_level() {
  static const int level = [] {
    const char* env = std::getenv("HYBRIDSEG_LOG");
    return env ? std::atoi(env) : 0;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[info] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[debug] " << msg << "\n";
}

/// Declarative key=value run configuration. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
class RunConfig {
 public:
  explicit RunConfig(std::map<std::string, std::string> defaults)
      : values_(std::move(defaults)) {}

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": expected key=value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw std::invalid_argument("unknown config key: " + key);
    it->second = value;
  }

  const std::string& str(const std::string& key) const {
    return values_.at(key);
  }
  double real(const std::string& key) const { return std::stod(values_.at(key)); }
  long integer(const std::string& key) const { return std::stol(values_.at(key)); }
  bool flag(const std::string& key) const {
    const auto& v = values_.at(key);
    return v == "1" || v == "true" || v == "yes" || v == "on";
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Writes the fully-resolved configuration next to the run outputs.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  }

 private:
  std::map<std::string, std::string> values_;
};

/// FNV-1a 64-bit digest of a file's bytes, printed as hex.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!in) break;
  }
  std::ostringstream hex;
  hex << std::hex << hash;
  return hex.str();
}

/// Rerun manifest: tool version, subcommand, resolved configuration, seeds,
/// and digests of every input consumed.
class Manifest {
 public:
  Manifest(std::string command, const std::string& out_dir)
      : out_dir_(out_dir) {
    data_["tool"] = "hybridseg";
    data_["version"] = hybridseg::kVersion;
    data_["command"] = std::move(command);
    data_["inputs"] = nlohmann::json::object();
    data_["outputs"] = nlohmann::json::array();
    std::filesystem::create_directories(out_dir);
  }

  void record_input(const std::string& path) {
    data_["inputs"][path] = file_digest(path);
  }
  void record_config(const RunConfig& config) {
    data_["config"] = config.values();
  }
  void record(const std::string& key, const nlohmann::json& value) {
    data_[key] = value;
  }

  std::string out_path(const std::string& name) {
    data_["outputs"].push_back(name);
    return (std::filesystem::path(out_dir_) / name).string();
  }

  void save() const {
    const auto path = std::filesystem::path(out_dir_) / "manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << data_.dump(2) << "\n";
  }

 private:
  std::string out_dir_;
  nlohmann::json data_;
};

}  // namespace hybridseg::cli
