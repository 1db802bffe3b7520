// SPDX-License-Identifier: Apache-2.0
#include "clover/prompt.hpp"

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::gen {

const std::string_view kPathologySystemPrompt =
    "As a specialized AI assistant focusing on pathological images, you will receive textual descriptions "
    "(caption) of figures. Please note that you do not have access to the actual images. Your task is to "
    "generate a set of question-and-answer (QA) pairs between the person inquiring about the images (user) "
    "and you as the assistant responding. The QA should be conducted as if both the user and the assistant "
    "are examining the images, without referring to textual information.\n"
    "The following are the requirements for generating question-and-answer pairs:\n"
    "- Avoid referencing dates or magnification ratios.\n"
    "- Focus on visual descriptions, including organizational structure, cellular morphology, potential "
    "pathological changes, location, etc.\n"
    "- Avoid using phrases such as \"mention\", \"title\", \"context\", or \"narrator\". Instead, refer to "
    "information as being \"in the image.\"\n"
    "- When responding to questions, adopt an objective and responsible attitude, avoiding overconfidence, "
    "and refrain from providing medical advice or diagnostic information. Encourage users to consult "
    "healthcare professionals for more accurate advice.\n"
    "The content should include 4-5 question-and-answer pairs related to visual aspects of the images.";

const std::string_view kPathologistTaskPrompt =
    "Now that you are a pathologist, please answer the following questions based on the images";

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw ParseError(fmt::format("unknown message role '{}'", s));
}

PromptEnvelope::PromptEnvelope(std::vector<Message> messages) : messages_(std::move(messages)) {
  if (messages_.size() < 2) throw InvalidArgument("envelope needs at least a system and a user message");
  if (messages_.front().role != Role::system) throw InvalidArgument("first envelope message must be system");
  if (messages_.back().role != Role::user) throw InvalidArgument("last envelope message must be user");
  const std::size_t middle = messages_.size() - 2;
  if (middle % 2 != 0) throw InvalidArgument("few-shot messages must come in user/assistant pairs");
  for (std::size_t i = 1; i + 1 < messages_.size(); ++i) {
    const Role expected = (i % 2 == 1) ? Role::user : Role::assistant;
    if (messages_[i].role != expected) {
      throw InvalidArgument(fmt::format("message {} should be {}", i, to_string(expected)));
    }
  }
}

json PromptEnvelope::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages_) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return json{{"messages", std::move(msgs)}};
}

PromptEnvelope PromptEnvelope::from_json(const json& j) {
  std::vector<Message> msgs;
  for (const auto& m : j.at("messages")) {
    msgs.push_back(Message{parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
  }
  return PromptEnvelope(std::move(msgs));
}

std::string PromptEnvelope::digest() const { return sha256_hex(to_json().dump()); }

PromptEnvelope build_prompt(std::string_view caption, const std::vector<FewShotExample>& fewshot,
                            std::string_view system_text) {
  if (trim(caption).empty()) throw InvalidArgument("caption must be non-empty");
  std::vector<Message> msgs;
  msgs.reserve(2 + 2 * fewshot.size());
  msgs.push_back(Message{Role::system, std::string(system_text)});
  for (const auto& ex : fewshot) {
    msgs.push_back(Message{Role::user, ex.user});
    msgs.push_back(Message{Role::assistant, ex.assistant});
  }
  msgs.push_back(Message{Role::user, std::string(caption)});
  return PromptEnvelope(std::move(msgs));
}

std::vector<FewShotExample> load_fewshot(const std::filesystem::path& path) {
  std::vector<FewShotExample> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(FewShotExample{j.at("user").get<std::string>(), j.at("assistant").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("few-shot example: {}", e.what()), line);
    }
  });
  return out;
}

std::string stage2_input(std::string_view question) {
  return fmt::format("{} {}", kPathologistTaskPrompt, question);
}

}  // namespace clover::gen
