// SPDX-License-Identifier: Apache-2.0
#include "clover/config.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "clover/error.hpp"
#include "clover/util.hpp"

namespace clover {

const std::map<std::string, std::string_view>& config_keys() {
  static const std::map<std::string, std::string_view> keys{
      {"seed", "PRNG seed for every sampling step"},
      {"budget_usd", "spend cap for gen-qa, in USD"},
      {"strict_parse", "drop generated records that fail parsing or lint"},
      {"paths.corpus", "ingested corpus JSONL"},
      {"paths.manifest", "raw image-text manifest for ingest"},
      {"paths.templates", "template statement bank, one per line"},
      {"paths.fewshot", "few-shot examples JSONL {user, assistant}"},
      {"paths.fixtures", "mock backend fixture directory"},
      {"paths.output_dir", "directory for every written artifact"},
      {"paths.patches", "patch manifest CSV"},
      {"paths.test_wsis", "test WSI list, one id per line"},
      {"backend.mode", "live or mock"},
      {"backend.endpoint", "chat-completion URL (live mode)"},
      {"backend.dialect", "request/response dialect"},
      {"backend.model", "model name sent to the endpoint"},
      {"backend.temperature", "sampling temperature sent to the endpoint"},
      {"backend.rate_in_usd_per_1k", "prompt price per 1k tokens"},
      {"backend.rate_out_usd_per_1k", "completion price per 1k tokens"},
      {"backend.max_concurrency", "requests in flight"},
      {"backend.max_retries", "retries for transient failures"},
      {"backend.base_delay_ms", "first backoff delay"},
      {"backend.max_delay_ms", "backoff ceiling"},
      {"backend.max_completion_tokens", "completion cap per request"},
      {"backend.timeout_s", "HTTP timeout"},
      {"sampling.prng", "PRNG algorithm; only mt19937_64"},
      {"metrics.log_base_fixed", "cost ratio uses log10; only true"},
  };
  return keys;
}

Config Config::parse(std::string_view text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }

  Config cfg;
  cfg.origin_ = origin;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.values_[name] = node.data();
      continue;
    }
    for (const auto& [leaf, value] : node) cfg.values_[name + "." + leaf] = value.data();
  }
  for (const auto& [key, value] : cfg.values_) {
    if (!config_keys().count(key)) throw ConfigError(fmt::format("{}: unknown config key '{}'", origin, key));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse(read_file(path), path.string());
}

Config Config::resolve(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load(*explicit_path);
  if (const char* env = std::getenv("CLOVER_CONFIG"); env && *env) return load(env);
  return Config{};
}

void Config::set(const std::string& key, std::string value) {
  if (!config_keys().count(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  values_[key] = std::move(value);
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::require(const std::string& key) const {
  auto v = get(key);
  if (!v || trim(*v).empty()) throw ConfigError(fmt::format("missing config key '{}' ({})", key, origin_));
  return *v;
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const auto s = trim(raw);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not a valid number", key, raw));
  }
  return v;
}

}  // namespace

double Config::require_double(const std::string& key) const { return parse_number<double>(key, require(key)); }

std::string Config::get_or(const std::string& key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  const auto s = to_lower_ascii(trim(*v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", key, *v));
}

void Config::validate() const {
  if (get_double("budget_usd", 0) < 0) throw ConfigError("budget_usd must be >= 0");
  if (get_int("backend.max_concurrency", 4) < 1) throw ConfigError("backend.max_concurrency must be >= 1");
  if (get_int("backend.max_retries", 5) < 0) throw ConfigError("backend.max_retries must be >= 0");
  if (get_int("backend.max_completion_tokens", 512) < 1) {
    throw ConfigError("backend.max_completion_tokens must be >= 1");
  }
  const auto mode = get_or("backend.mode", "mock");
  if (mode != "live" && mode != "mock") throw ConfigError(fmt::format("backend.mode must be live or mock, got '{}'", mode));
  if (mode == "live" && trim(get_or("backend.endpoint", "")).empty()) {
    throw ConfigError("backend.mode=live requires backend.endpoint");
  }
  if (get_or("sampling.prng", std::string(Rng::kAlgorithm)) != Rng::kAlgorithm) {
    throw ConfigError(fmt::format("sampling.prng: only {} is supported", Rng::kAlgorithm));
  }
  if (!get_bool("metrics.log_base_fixed", true)) throw ConfigError("metrics.log_base_fixed: only true is supported");
}

}  // namespace clover
