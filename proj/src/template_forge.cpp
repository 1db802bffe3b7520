// SPDX-License-Identifier: Apache-2.0
#include "clover/template_forge.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::template_forge {

namespace {

// Keep in sync with data/llava_detail_prompts.txt.
const std::vector<std::string>& builtin_statements() {
  static const std::vector<std::string> kStatements = {
      "Describe the following image in detail",
      "Provide a detailed description of the given image",
      "Give an elaborate explanation of the image you see",
      "Share a comprehensive rundown of the presented image",
      "Offer a thorough analysis of the image",
      "Explain the various aspects of the image before you",
      "Clarify the contents of the displayed image with great detail",
      "Characterize the image using a well-detailed description",
      "Break down the elements of the image in a detailed manner",
      "Walk through the important details of the image",
      "Portray the image with a rich, descriptive narrative",
      "Narrate the contents of the image with precision",
      "Analyze the image in a comprehensive and detailed manner",
      "Illustrate the image through a descriptive explanation",
      "Examine the image closely and share its details",
      "Write an exhaustive depiction of the given image",
      "Provide an in-depth account of the image",
  };
  return kStatements;
}

}  // namespace

TemplateBank::TemplateBank(std::vector<std::string> statements) : statements_(std::move(statements)) {
  if (statements_.empty()) throw InvalidArgument("template bank is empty");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < statements_.size(); ++i) {
    if (trim(statements_[i]).empty()) throw InvalidArgument(fmt::format("template {} is blank", i + 1));
    if (!seen.insert(statements_[i]).second) {
      throw InvalidArgument(fmt::format("duplicate template statement: '{}'", statements_[i]));
    }
  }
}

TemplateBank TemplateBank::defaults() { return TemplateBank(builtin_statements()); }

TemplateBank TemplateBank::load(const std::filesystem::path& path) { return TemplateBank(read_line_list(path)); }

bool TemplateBank::contains(std::string_view s) const {
  return std::find(statements_.begin(), statements_.end(), s) != statements_.end();
}

std::vector<Instruction> build_template_instructions(const corpus::Corpus& corpus, const TemplateBank& bank,
                                                     std::uint64_t seed, const std::string& created_at) {
  std::vector<Instruction> out;
  out.reserve(corpus.records.size());
  for (const auto& rec : corpus.records) {
    if (trim(rec.merged_caption).empty()) {
      throw InvalidArgument(fmt::format("record '{}' has an empty merged caption", rec.image_id));
    }
    Rng rng(derive_seed(seed, rec.image_id));
    const auto& question = bank.statements()[rng.below(bank.size())];
    out.push_back(make_instruction(rec.image_id, InstructionKind::template_based, {Turn{question, rec.merged_caption}},
                                   Provenance{"template", std::nullopt, std::nullopt, created_at}));
  }
  return out;
}

}  // namespace clover::template_forge
