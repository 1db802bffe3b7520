// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "clover/util.hpp"

namespace clover::gen {

/// System message of the pathology QA-generation prompt. Four requirement
/// bullets, one per line, followed by the 4-5 pair instruction.
extern const std::string_view kPathologySystemPrompt;

/// Task prefix placed before each question in instruction-tuning inputs.
extern const std::string_view kPathologistTaskPrompt;

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view s);

struct Message {
  Role role;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct FewShotExample {
  std::string user;
  std::string assistant;
};

/// Ordered chat messages: system first, optional user/assistant few-shot
/// pairs, final user message carrying the caption.
class PromptEnvelope {
 public:
  explicit PromptEnvelope(std::vector<Message> messages);

  const std::vector<Message>& messages() const noexcept { return messages_; }

  /// {"messages":[{"content":...,"role":...},...]}
  json to_json() const;
  static PromptEnvelope from_json(const json& j);

  /// SHA-256 of the compact to_json() serialization. Keys mock fixtures and
  /// provenance.prompt_hash.
  std::string digest() const;

  bool operator==(const PromptEnvelope&) const = default;

 private:
  std::vector<Message> messages_;
};

PromptEnvelope build_prompt(std::string_view caption, const std::vector<FewShotExample>& fewshot,
                            std::string_view system_text = kPathologySystemPrompt);

/// Few-shot JSONL: one {"user": ..., "assistant": ...} object per line.
std::vector<FewShotExample> load_fewshot(const std::filesystem::path& path);

/// "<task prompt> <question>"
std::string stage2_input(std::string_view question);

}  // namespace clover::gen
