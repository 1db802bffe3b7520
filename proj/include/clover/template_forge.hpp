// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clover/corpus.hpp"
#include "clover/instruction.hpp"

namespace clover::template_forge {

/// Ordered list of descriptive questions. Entries are non-empty and distinct.
class TemplateBank {
 public:
  static constexpr std::size_t kDefaultSize = 17;

  explicit TemplateBank(std::vector<std::string> statements);

  /// The bundled detailed-description prompts (17 entries).
  static TemplateBank defaults();
  static TemplateBank load(const std::filesystem::path& path);

  const std::vector<std::string>& statements() const noexcept { return statements_; }
  std::size_t size() const noexcept { return statements_.size(); }
  bool contains(std::string_view s) const;

 private:
  std::vector<std::string> statements_;
};

/// One single-turn instruction per record: a question drawn uniformly from
/// `bank` (sub-stream keyed by (seed, image_id)) answered by the record's
/// merged caption verbatim.
std::vector<Instruction> build_template_instructions(const corpus::Corpus& corpus, const TemplateBank& bank,
                                                     std::uint64_t seed, const std::string& created_at);

}  // namespace clover::template_forge
