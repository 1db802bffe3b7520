// SPDX-License-Identifier: Apache-2.0
#include "clover/instruction.hpp"

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover {

std::string_view to_string(InstructionKind kind) {
  return kind == InstructionKind::template_based ? "template" : "generation";
}

InstructionKind parse_instruction_kind(std::string_view s) {
  if (s == "template") return InstructionKind::template_based;
  if (s == "generation") return InstructionKind::generation_based;
  throw ParseError(fmt::format("unknown instruction kind '{}'", s));
}

std::string make_instruction_id(std::string_view image_id, InstructionKind kind,
                                const std::vector<Turn>& turns) {
  json questions = json::array();
  for (const auto& t : turns) questions.push_back(t.question);
  const json key = json::array({image_id, to_string(kind), questions});
  return sha256_hex(key.dump());
}

void validate(const Instruction& ins) {
  if (ins.image_id.empty()) throw InvalidArgument("instruction has empty image_id");
  if (ins.turns.empty()) throw InvalidArgument(fmt::format("instruction for '{}' has no turns", ins.image_id));
  if (ins.kind == InstructionKind::template_based && ins.turns.size() != 1) {
    throw InvalidArgument(fmt::format("template instruction for '{}' must have exactly one turn", ins.image_id));
  }
  for (std::size_t i = 0; i < ins.turns.size(); ++i) {
    if (trim(ins.turns[i].question).empty() || trim(ins.turns[i].answer).empty()) {
      throw InvalidArgument(fmt::format("instruction for '{}' has blank text in turn {}", ins.image_id, i + 1));
    }
  }
}

Instruction make_instruction(std::string image_id, InstructionKind kind, std::vector<Turn> turns,
                             Provenance provenance) {
  Instruction ins{make_instruction_id(image_id, kind, turns), std::move(image_id), kind, std::move(turns),
                  std::move(provenance)};
  validate(ins);
  return ins;
}

json to_json(const Instruction& ins) {
  json turns = json::array();
  for (const auto& t : ins.turns) turns.push_back({{"question", t.question}, {"answer", t.answer}});
  json prov{{"method", ins.provenance.method}, {"created_at", ins.provenance.created_at}};
  prov["model"] = ins.provenance.model ? json(*ins.provenance.model) : json(nullptr);
  prov["prompt_hash"] = ins.provenance.prompt_hash ? json(*ins.provenance.prompt_hash) : json(nullptr);
  return json{{"instruction_id", ins.id},
              {"image_id", ins.image_id},
              {"kind", to_string(ins.kind)},
              {"turns", std::move(turns)},
              {"provenance", std::move(prov)}};
}

Instruction instruction_from_json(const json& j, std::size_t line) {
  try {
    Instruction ins;
    ins.id = j.at("instruction_id").get<std::string>();
    ins.image_id = j.at("image_id").get<std::string>();
    ins.kind = parse_instruction_kind(j.at("kind").get<std::string>());
    for (const auto& t : j.at("turns")) {
      ins.turns.push_back(Turn{t.at("question").get<std::string>(), t.at("answer").get<std::string>()});
    }
    const auto& p = j.at("provenance");
    ins.provenance.method = p.value("method", "");
    ins.provenance.created_at = p.value("created_at", "");
    if (p.contains("model") && !p["model"].is_null()) ins.provenance.model = p["model"].get<std::string>();
    if (p.contains("prompt_hash") && !p["prompt_hash"].is_null()) {
      ins.provenance.prompt_hash = p["prompt_hash"].get<std::string>();
    }
    validate(ins);
    if (ins.id != make_instruction_id(ins.image_id, ins.kind, ins.turns)) {
      throw IntegrityError(line ? fmt::format("line {}: instruction_id {} does not match its content", line, ins.id)
                                : fmt::format("instruction_id {} does not match its content", ins.id));
    }
    return ins;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad instruction record: {}", e.what()), line);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), line);
  }
}

}  // namespace clover
