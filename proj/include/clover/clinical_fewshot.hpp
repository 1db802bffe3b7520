// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clover/vqa_metrics.hpp"

namespace clover::clinical {

enum class Organ { stomach, intestine };
enum class PatchLabel { tumor, non_tumor };

std::string_view to_string(Organ o);
std::string_view to_string(PatchLabel l);
Organ parse_organ(std::string_view s);
PatchLabel parse_label(std::string_view s);

inline constexpr std::string_view kQuestion = "Is this pathological image showing a negative or positive result?";
inline constexpr std::string_view kPositiveAnswer = "this is a positive pathological image";
inline constexpr std::string_view kNegativeAnswer = "this is a negative pathological image";

struct PatchRecord {
  std::string patch_id;
  std::string wsi_id;
  Organ organ = Organ::stomach;
  PatchLabel label = PatchLabel::tumor;
  std::string patch_ref;
  std::pair<int, int> size_px{512, 512};

  bool operator==(const PatchRecord&) const = default;
};

struct PatchSummary {
  std::size_t total = 0;
  std::map<std::pair<Organ, PatchLabel>, std::size_t> counts;

  std::size_t count(Organ o, PatchLabel l) const;
};

/// Parses a `patch_id,wsi_id,organ,label,patch_ref` CSV. Unknown labels or
/// organs raise ParseError; duplicate patch ids or a WSI listed under two
/// organs raise IntegrityError.
std::vector<PatchRecord> parse_patches_csv(std::string_view text);
std::vector<PatchRecord> ingest_patches(const std::filesystem::path& path);

PatchSummary summarize(const std::vector<PatchRecord>& patches);

/// Test WSI list: one wsi_id per line, `#` comments allowed.
std::vector<std::string> read_wsi_list(const std::filesystem::path& path);

struct FewShotSplit {
  std::size_t k = 0;
  Organ organ = Organ::stomach;
  std::vector<std::string> train_tumor_wsis;
  std::vector<std::string> train_non_tumor_wsis;
  std::vector<std::string> test_wsis;
  std::vector<PatchRecord> train_patches;
  std::vector<PatchRecord> test_patches;
  std::uint64_t seed = 0;
  std::size_t replicate_index = 1;  // 1-based

  /// Tumor WSIs followed by non-tumor WSIs.
  std::vector<std::string> train_wsis() const;
};

/// Builds `replicates` K-shot splits for one organ.
///
/// A WSI is eligible for a class when it is not a test WSI and has at least
/// one patch of that class. Each replicate draws k tumor WSIs, then k
/// non-tumor WSIs from the remaining eligible ones, so the 2k training WSIs
/// are distinct. Training patches are the sampled WSIs' patches of the class
/// they were drawn for; test patches are every patch of the organ's test WSIs
/// and are identical across replicates. Draws repeat (deterministically)
/// until a combination unseen in earlier replicates appears, when one exists.
std::vector<FewShotSplit> make_kshot(const std::vector<PatchRecord>& patches, Organ organ, std::size_t k,
                                     const std::vector<std::string>& test_wsis, std::uint64_t seed,
                                     std::size_t replicates = 5);

/// Cancer-detection VQA records: fixed question, positive/negative answer
/// sentence as reference, empty prediction, qtype closed.
std::vector<metrics::EvalExample> to_vqa(const std::vector<PatchRecord>& patches);

/// Polarity pair used to score to_vqa answers.
metrics::PolarityPair detection_polarity();

json to_json(const PatchRecord& p);
json to_json(const FewShotSplit& s);

}  // namespace clover::clinical
