// SPDX-License-Identifier: Apache-2.0
#include "clover/clinical_fewshot.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::clinical {

std::string_view to_string(Organ o) { return o == Organ::stomach ? "stomach" : "intestine"; }
std::string_view to_string(PatchLabel l) { return l == PatchLabel::tumor ? "tumor" : "non_tumor"; }

Organ parse_organ(std::string_view s) {
  if (s == "stomach") return Organ::stomach;
  if (s == "intestine") return Organ::intestine;
  throw ParseError(fmt::format("unknown organ '{}' (expected stomach or intestine)", s));
}

PatchLabel parse_label(std::string_view s) {
  if (s == "tumor") return PatchLabel::tumor;
  if (s == "non_tumor") return PatchLabel::non_tumor;
  throw ParseError(fmt::format("unknown label '{}' (expected tumor or non_tumor)", s));
}

std::size_t PatchSummary::count(Organ o, PatchLabel l) const {
  auto it = counts.find({o, l});
  return it == counts.end() ? 0 : it->second;
}

std::vector<PatchRecord> parse_patches_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  std::vector<PatchRecord> out;
  if (rows.empty()) return out;

  static const std::vector<std::string> kHeader{"patch_id", "wsi_id", "organ", "label", "patch_ref"};
  std::vector<std::string> header;
  for (const auto& h : rows.front().fields) header.emplace_back(trim(h));
  if (header != kHeader) throw ParseError("patch manifest header must be patch_id,wsi_id,organ,label,patch_ref", 1);

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, Organ> wsi_organ;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != kHeader.size()) {
      throw ParseError(fmt::format("expected 5 fields, found {}", r.fields.size()), r.line);
    }
    PatchRecord p;
    p.patch_id = std::string(trim(r.fields[0]));
    p.wsi_id = std::string(trim(r.fields[1]));
    if (p.patch_id.empty() || p.wsi_id.empty()) throw ParseError("empty patch_id or wsi_id", r.line);
    try {
      p.organ = parse_organ(trim(r.fields[2]));
      p.label = parse_label(trim(r.fields[3]));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r.line);
    }
    p.patch_ref = r.fields[4];
    if (!ids.insert(p.patch_id).second) {
      throw IntegrityError(fmt::format("line {}: duplicate patch_id '{}'", r.line, p.patch_id));
    }
    auto [it, inserted] = wsi_organ.try_emplace(p.wsi_id, p.organ);
    if (!inserted && it->second != p.organ) {
      throw IntegrityError(fmt::format("line {}: WSI '{}' appears as both {} and {}", r.line, p.wsi_id,
                                       to_string(it->second), to_string(p.organ)));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PatchRecord> ingest_patches(const std::filesystem::path& path) {
  try {
    return parse_patches_csv(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

PatchSummary summarize(const std::vector<PatchRecord>& patches) {
  PatchSummary s;
  s.total = patches.size();
  for (const auto& p : patches) ++s.counts[{p.organ, p.label}];
  return s;
}

std::vector<std::string> read_wsi_list(const std::filesystem::path& path) { return read_line_list(path); }

std::vector<std::string> FewShotSplit::train_wsis() const {
  auto out = train_tumor_wsis;
  out.insert(out.end(), train_non_tumor_wsis.begin(), train_non_tumor_wsis.end());
  return out;
}

namespace {

std::vector<std::string> draw(const std::vector<std::string>& pool, std::size_t k, Rng& rng) {
  std::vector<std::string> out;
  for (auto i : sample_indices(pool.size(), k, rng)) out.push_back(pool[i]);
  return out;
}

std::string combination_key(std::vector<std::string> tumor, std::vector<std::string> non_tumor) {
  std::sort(tumor.begin(), tumor.end());
  std::sort(non_tumor.begin(), non_tumor.end());
  return fmt::format("{}|{}", fmt::join(tumor, ","), fmt::join(non_tumor, ","));
}

}  // namespace

std::vector<FewShotSplit> make_kshot(const std::vector<PatchRecord>& patches, Organ organ, std::size_t k,
                                     const std::vector<std::string>& test_wsis, std::uint64_t seed,
                                     std::size_t replicates) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (replicates < 1) throw InvalidArgument("replicates must be >= 1");

  std::unordered_map<std::string, Organ> known;
  for (const auto& p : patches) known.emplace(p.wsi_id, p.organ);
  std::vector<std::string> organ_test;
  std::unordered_set<std::string> test_set;
  for (const auto& w : test_wsis) {
    auto it = known.find(w);
    if (it == known.end()) throw IntegrityError(fmt::format("test WSI '{}' has no patches in the manifest", w));
    if (it->second == organ && test_set.insert(w).second) organ_test.push_back(w);
  }
  if (organ_test.empty()) throw InvalidArgument(fmt::format("no test WSIs listed for {}", to_string(organ)));

  // Eligible WSIs per class, in first-appearance order.
  std::vector<std::string> tumor_pool, non_tumor_pool;
  std::set<std::string> seen_tumor, seen_non_tumor;
  for (const auto& p : patches) {
    if (p.organ != organ || test_set.count(p.wsi_id)) continue;
    if (p.label == PatchLabel::tumor && seen_tumor.insert(p.wsi_id).second) tumor_pool.push_back(p.wsi_id);
    if (p.label == PatchLabel::non_tumor && seen_non_tumor.insert(p.wsi_id).second) {
      non_tumor_pool.push_back(p.wsi_id);
    }
  }
  if (tumor_pool.size() < k) {
    throw InvalidArgument(fmt::format("{} tumor: {} eligible WSIs, need k={}", to_string(organ), tumor_pool.size(), k));
  }

  std::vector<PatchRecord> test_patches;
  for (const auto& p : patches) {
    if (p.organ == organ && test_set.count(p.wsi_id)) test_patches.push_back(p);
  }

  constexpr int kMaxAttempts = 64;
  std::set<std::string> used;
  std::vector<FewShotSplit> out;
  for (std::size_t r = 1; r <= replicates; ++r) {
    std::vector<std::string> tumor, non_tumor;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Rng rng(derive_seed(seed, fmt::format("{}:k{}:rep{}:try{}", to_string(organ), k, r, attempt)));
      tumor = draw(tumor_pool, k, rng);
      std::vector<std::string> remaining;
      for (const auto& w : non_tumor_pool) {
        if (std::find(tumor.begin(), tumor.end(), w) == tumor.end()) remaining.push_back(w);
      }
      if (remaining.size() < k) {
        throw InvalidArgument(fmt::format("{} non_tumor: {} eligible WSIs outside the tumor draw, need k={}",
                                          to_string(organ), remaining.size(), k));
      }
      non_tumor = draw(remaining, k, rng);
      if (used.insert(combination_key(tumor, non_tumor)).second) break;
    }

    FewShotSplit split;
    split.k = k;
    split.organ = organ;
    split.train_tumor_wsis = tumor;
    split.train_non_tumor_wsis = non_tumor;
    split.test_wsis = organ_test;
    split.test_patches = test_patches;
    split.seed = seed;
    split.replicate_index = r;
    const std::set<std::string> tumor_set(tumor.begin(), tumor.end());
    const std::set<std::string> non_tumor_set(non_tumor.begin(), non_tumor.end());
    for (const auto& p : patches) {
      if (p.organ != organ) continue;
      const bool take = p.label == PatchLabel::tumor ? tumor_set.count(p.wsi_id) : non_tumor_set.count(p.wsi_id);
      if (take) split.train_patches.push_back(p);
    }
    out.push_back(std::move(split));
  }
  return out;
}

std::vector<metrics::EvalExample> to_vqa(const std::vector<PatchRecord>& patches) {
  std::vector<metrics::EvalExample> out;
  out.reserve(patches.size());
  for (const auto& p : patches) {
    out.push_back(metrics::EvalExample{
        p.patch_id, std::string(kQuestion),
        std::string(p.label == PatchLabel::tumor ? kPositiveAnswer : kNegativeAnswer), "",
        metrics::QuestionType::closed});
  }
  return out;
}

metrics::PolarityPair detection_polarity() { return metrics::PolarityPair{"positive", "negative"}; }

json to_json(const PatchRecord& p) {
  return json{{"patch_id", p.patch_id},   {"wsi_id", p.wsi_id},       {"organ", to_string(p.organ)},
              {"label", to_string(p.label)}, {"patch_ref", p.patch_ref}, {"size_px", {p.size_px.first, p.size_px.second}}};
}

json to_json(const FewShotSplit& s) {
  json train = json::array(), test = json::array();
  for (const auto& p : s.train_patches) train.push_back(to_json(p));
  for (const auto& p : s.test_patches) test.push_back(to_json(p));
  return json{{"k", s.k},
              {"organ", to_string(s.organ)},
              {"train_wsis", s.train_wsis()},
              {"train_wsis_by_class", {{"tumor", s.train_tumor_wsis}, {"non_tumor", s.train_non_tumor_wsis}}},
              {"test_wsis", s.test_wsis},
              {"train_patches", std::move(train)},
              {"test_patches", std::move(test)},
              {"seed", s.seed},
              {"replicate_index", s.replicate_index}};
}

}  // namespace clover::clinical
