// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clover/util.hpp"

namespace clover {

enum class InstructionKind { template_based, generation_based };

std::string_view to_string(InstructionKind kind);
InstructionKind parse_instruction_kind(std::string_view s);

struct Turn {
  std::string question;
  std::string answer;

  bool operator==(const Turn&) const = default;
};

struct Provenance {
  std::string method;
  std::optional<std::string> model;
  std::optional<std::string> prompt_hash;
  std::string created_at;

  bool operator==(const Provenance&) const = default;
};

/// A question/answer sequence bound to one image.
///
/// `id` is a SHA-256 digest of (image_id, kind, ordered questions); answers
/// and provenance are deliberately outside the digest so that re-generating
/// answers for the same questions keeps the id.
struct Instruction {
  std::string id;
  std::string image_id;
  InstructionKind kind = InstructionKind::template_based;
  std::vector<Turn> turns;
  Provenance provenance;

  bool operator==(const Instruction&) const = default;

  /// Same image, kind and turns; provenance ignored.
  bool same_content(const Instruction& other) const {
    return image_id == other.image_id && kind == other.kind && turns == other.turns;
  }
};

std::string make_instruction_id(std::string_view image_id, InstructionKind kind,
                                const std::vector<Turn>& turns);

/// Builds an instruction and fills in its id. Throws InvalidArgument when the
/// turn list is empty, any text is blank, or a template instruction has more
/// than one turn.
Instruction make_instruction(std::string image_id, InstructionKind kind, std::vector<Turn> turns,
                             Provenance provenance);

void validate(const Instruction& ins);

json to_json(const Instruction& ins);
Instruction instruction_from_json(const json& j, std::size_t line = 0);

}  // namespace clover
