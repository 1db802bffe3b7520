// SPDX-License-Identifier: Apache-2.0
#include "clover/corpus.hpp"

#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::corpus {

namespace {

struct Row {
  std::string image_id;
  std::string image_ref;
  std::string caption;
  std::string source;
  std::size_t line;
};

class Builder {
 public:
  void add(Row row) {
    if (trim(row.image_id).empty()) throw ParseError("row is missing image_id", row.line);
    if (trim(row.caption).empty()) throw ParseError("row has no caption", row.line);
    auto [it, inserted] = index_.try_emplace(row.image_id, corpus_.records.size());
    if (inserted) {
      corpus_.records.push_back(ImageTextRecord{row.image_id, row.image_ref, {row.caption}, {}, row.source});
      return;
    }
    auto& rec = corpus_.records[it->second];
    for (const auto& c : rec.captions) {
      if (c == row.caption) {
        ++corpus_.duplicate_captions_dropped;
        return;
      }
    }
    rec.captions.push_back(std::move(row.caption));
    if (rec.image_ref.empty()) rec.image_ref = std::move(row.image_ref);
    if (rec.source.empty()) rec.source = std::move(row.source);
  }

  Corpus take() { return std::move(corpus_); }

 private:
  Corpus corpus_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string string_field(const json& j, const char* key, std::size_t line, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(fmt::format("missing field '{}'", key), line);
    return {};
  }
  if (!it->is_string()) throw ParseError(fmt::format("field '{}' must be a string", key), line);
  return it->get<std::string>();
}

}  // namespace

ManifestFormat parse_format(std::string_view name) {
  if (name == "jsonl") return ManifestFormat::jsonl;
  if (name == "csv") return ManifestFormat::csv;
  throw InvalidArgument(fmt::format("unknown manifest format '{}' (expected jsonl or csv)", name));
}

ManifestFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ManifestFormat::csv : ManifestFormat::jsonl;
}

Corpus ingest_jsonl_text(std::string_view text) {
  Builder b;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("invalid JSON ({})", e.what()), lineno);
    }
    if (!j.is_object()) throw ParseError("manifest row must be a JSON object", lineno);
    b.add(Row{string_field(j, "image_id", lineno, true), string_field(j, "image_ref", lineno, false),
              string_field(j, "caption", lineno, true), string_field(j, "source", lineno, false), lineno});
  }
  return b.take();
}

Corpus ingest_csv_text(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) return {};
  const auto& header = rows.front().fields;
  auto column = [&](std::string_view name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  const auto c_id = column("image_id"), c_ref = column("image_ref"), c_cap = column("caption"),
             c_src = column("source");
  if (c_id < 0 || c_cap < 0) {
    throw ParseError("CSV header must contain image_id and caption (expected image_id,image_ref,caption,source)", 1);
  }
  auto get = [](const CsvRow& r, std::ptrdiff_t c) -> std::string {
    return c >= 0 && static_cast<std::size_t>(c) < r.fields.size() ? r.fields[c] : std::string{};
  };

  Builder b;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() > header.size()) {
      throw ParseError(fmt::format("expected {} fields, found {}", header.size(), r.fields.size()), r.line);
    }
    b.add(Row{get(r, c_id), get(r, c_ref), get(r, c_cap), get(r, c_src), r.line});
  }
  return b.take();
}

Corpus ingest_manifest(const std::filesystem::path& path, ManifestFormat format) {
  const std::string text = read_file(path);
  try {
    return format == ManifestFormat::csv ? ingest_csv_text(text) : ingest_jsonl_text(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string merge_captions(const std::vector<std::string>& captions) {
  std::string out;
  for (const auto& c : captions) {
    auto t = trim(c);
    if (t.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(t);
  }
  return out;
}

Corpus merge_and_filter(Corpus corpus, std::size_t min_words) {
  if (min_words < 1) throw InvalidArgument("min_words must be >= 1");
  std::vector<ImageTextRecord> kept;
  kept.reserve(corpus.records.size());
  for (auto& r : corpus.records) {
    r.merged_caption = merge_captions(r.captions);
    if (word_count(r.merged_caption) >= min_words) kept.push_back(std::move(r));
  }
  corpus.records = std::move(kept);
  return corpus;
}

Corpus sample(const Corpus& corpus, std::size_t size, std::uint64_t seed) {
  if (size > corpus.records.size()) {
    throw InvalidArgument(fmt::format("sample size {} exceeds record count {}", size, corpus.records.size()));
  }
  Rng rng(seed);
  Corpus out;
  out.seed = seed;
  out.duplicate_captions_dropped = corpus.duplicate_captions_dropped;
  out.records.reserve(size);
  for (auto i : sample_indices(corpus.records.size(), size, rng)) out.records.push_back(corpus.records[i]);
  return out;
}

json record_to_json(const ImageTextRecord& r) {
  return json{{"image_id", r.image_id},
              {"image_ref", r.image_ref},
              {"captions", r.captions},
              {"merged_caption", r.merged_caption},
              {"source", r.source}};
}

ImageTextRecord record_from_json(const json& j, std::size_t line) {
  try {
    ImageTextRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.image_ref = j.value("image_ref", "");
    r.captions = j.at("captions").get<std::vector<std::string>>();
    r.merged_caption = j.value("merged_caption", "");
    r.source = j.value("source", "");
    if (r.image_id.empty()) throw ParseError("empty image_id", line);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad corpus record: {}", e.what()), line);
  }
}

std::string to_jsonl(const Corpus& corpus) {
  std::vector<json> rows;
  rows.reserve(corpus.records.size());
  for (const auto& r : corpus.records) rows.push_back(record_to_json(r));
  return clover::to_jsonl(rows);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  atomic_write_file(path, to_jsonl(corpus));
}

Corpus read_corpus(const std::filesystem::path& path) {
  Corpus c;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    auto r = record_from_json(j, line);
    if (!seen.emplace(r.image_id, line).second) {
      throw ParseError(fmt::format("duplicate image_id '{}'", r.image_id), line);
    }
    c.records.push_back(std::move(r));
  });
  return c;
}

}  // namespace clover::corpus
