// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clover/instruction.hpp"

namespace clover::store {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct Manifest {
  std::size_t generation_count = 0;
  std::size_t template_count = 0;
  /// Digests of the datasets or corpora this one was derived from.
  std::vector<std::string> source_digests;
  std::optional<std::uint64_t> seed;
  std::string note;  // operation that produced the dataset

  bool operator==(const Manifest&) const = default;
};

/// Instructions with unique ids plus a manifest whose counts match the items.
class InstructionDataset {
 public:
  InstructionDataset() = default;
  /// Validates id uniqueness and recomputes manifest counts.
  explicit InstructionDataset(std::vector<Instruction> items, Manifest manifest = {});

  const std::vector<Instruction>& items() const noexcept { return items_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return items_.size(); }

  /// SHA-256 over the ordered instruction ids.
  std::string digest() const;

  bool operator==(const InstructionDataset&) const = default;

 private:
  std::vector<Instruction> items_;
  Manifest manifest_;
};

/// Union of both inputs, `gen` items first. Identical ids are kept once; an id
/// shared by differing content raises IntegrityError.
InstructionDataset assemble_hybrid(const InstructionDataset& gen, const InstructionDataset& tmpl);

/// Seeded shuffle dealt round-robin into `k` disjoint subsets whose sizes
/// differ by at most one. k == 1 returns the input unchanged.
std::vector<InstructionDataset> split_subsets(const InstructionDataset& ds, std::size_t k, std::uint64_t seed);

/// Uniform sample without replacement, in draw order.
InstructionDataset sample_scale(const InstructionDataset& ds, std::size_t size, std::uint64_t seed);

/// Instruction JSONL body.
std::string to_jsonl(const InstructionDataset& ds);
json manifest_to_json(const InstructionDataset& ds);

/// Writes `path` and its `<path>.manifest.json` sidecar, each atomically.
void write_dataset(const std::filesystem::path& path, const InstructionDataset& ds);
/// Reads `path`; the sidecar is loaded when present.
InstructionDataset read_dataset(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

/// One training record per turn with the pathologist task prompt prepended to
/// the question: {"image_id", "text_input", "text_output"}.
std::string to_stage2_jsonl(const InstructionDataset& ds);

}  // namespace clover::store
