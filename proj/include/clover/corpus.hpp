// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clover/util.hpp"

namespace clover::corpus {

/// One image with all captions collected for it.
struct ImageTextRecord {
  std::string image_id;
  std::string image_ref;
  std::vector<std::string> captions;
  std::string merged_caption;  // empty until merge_and_filter
  std::string source;

  bool operator==(const ImageTextRecord&) const = default;
};

struct Corpus {
  std::vector<ImageTextRecord> records;
  std::uint64_t seed = 0;
  /// Exact (image_id, caption) repeats dropped during ingestion.
  std::size_t duplicate_captions_dropped = 0;

  bool operator==(const Corpus&) const = default;
};

enum class ManifestFormat { jsonl, csv };

ManifestFormat parse_format(std::string_view name);
/// Guesses from the extension; anything other than `.csv` is JSONL.
ManifestFormat format_from_path(const std::filesystem::path& path);

/// Reads an image-caption manifest. Rows sharing an image_id are folded into
/// one record with captions in file order.
Corpus ingest_manifest(const std::filesystem::path& path, ManifestFormat format);

/// Same as ingest_manifest but over in-memory text.
Corpus ingest_jsonl_text(std::string_view text);
Corpus ingest_csv_text(std::string_view text);

/// Trimmed captions joined by single spaces, empty captions skipped.
std::string merge_captions(const std::vector<std::string>& captions);

/// Sets merged_caption on every record, then drops records whose merged
/// caption has fewer than `min_words` whitespace-separated words.
Corpus merge_and_filter(Corpus corpus, std::size_t min_words = 25);

/// `size` records drawn uniformly without replacement, in draw order.
Corpus sample(const Corpus& corpus, std::size_t size, std::uint64_t seed);

json record_to_json(const ImageTextRecord& r);
ImageTextRecord record_from_json(const json& j, std::size_t line = 0);

/// Output corpus JSONL (one record per line).
std::string to_jsonl(const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
/// Reads a file produced by write_corpus.
Corpus read_corpus(const std::filesystem::path& path);

}  // namespace clover::corpus
