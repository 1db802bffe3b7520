// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace clover {

/// Sectioned key/value settings shared by every subcommand.
///
/// Keys are addressed as `section.name`; top-level keys (`seed`,
/// `budget_usd`, `strict_parse`) have no section. Command-line flags are
/// applied with set() after loading, so they win over the file.
class Config {
 public:
  Config() = default;

  /// INI text; unknown keys are rejected so typos do not pass silently.
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// `explicit_path` if given, else $CLOVER_CONFIG, else an empty config.
  static Config resolve(const std::optional<std::filesystem::path>& explicit_path);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  /// ConfigError naming the key when it is absent or malformed.
  std::string require(const std::string& key) const;
  double require_double(const std::string& key) const;

  std::string get_or(const std::string& key, std::string fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::uint64_t seed() const { return get_uint("seed", 0); }
  std::filesystem::path output_dir() const { return get_or("paths.output_dir", "out"); }
  bool live() const { return get_or("backend.mode", "mock") == "live"; }

  /// budget_usd >= 0, max_concurrency >= 1, live mode has an endpoint,
  /// and only the supported PRNG and metric options are requested.
  void validate() const;

  const std::string& origin() const noexcept { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "<defaults>";
};

/// Every key the config file may contain.
const std::map<std::string, std::string_view>& config_keys();

}  // namespace clover
