// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clover {

using json = nlohmann::json;

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Seeded sampling source shared by every module that draws at random.
///
/// The engine is std::mt19937_64, whose output sequence the C++ standard pins
/// exactly. Bounded draws use rejection on the raw 64-bit output instead of
/// std::uniform_int_distribution (implementation-defined), so any conforming
/// implementation reproduces the same samples for the same seed.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Child seed for a keyed sub-stream: first 8 bytes (big-endian) of
/// SHA-256("<seed>:<key>").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

/// First `size` positions of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t size, Rng& rng);

std::string_view trim(std::string_view s);

/// Maximal runs of non-whitespace characters.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

std::string to_lower_ascii(std::string_view s);

/// Writes to a sibling temp file, then renames over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Calls `fn(object, line_number)` for every non-blank line. Lines that are
/// not valid JSON raise ParseError carrying the line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

/// Serializes each value on its own line (compact, keys sorted).
std::string to_jsonl(const std::vector<json>& rows);

/// One CSV record and the 1-based line where it starts.
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. A trailing '\r' on a line is dropped.
std::vector<CsvRow> parse_csv(std::string_view text);

/// ISO-8601 UTC timestamp. Honors SOURCE_DATE_EPOCH for reproducible output.
std::string utc_timestamp();

/// Plain-text list: one entry per line, blank lines and `#` comments skipped.
std::vector<std::string> read_line_list(const std::filesystem::path& path);

}  // namespace clover
