// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clover::gen {

struct QAPair {
  std::string question;
  std::string answer;

  bool operator==(const QAPair&) const = default;
};

struct QAParseResult {
  std::vector<QAPair> pairs;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinPairs = 4;
inline constexpr std::size_t kMaxPairs = 5;

/// Extracts labeled question/answer pairs from generated text.
///
/// Recognized labels: `Question:` / `Q:` / `Answer:` / `A:` at the start of a
/// line, optionally after list numbering (`1.`, `2)`), a bullet (`-`, `*`),
/// markdown bold or a pair number (`Q1:`). Spelled-out `Question:` and
/// `Answer:` are also recognized mid-line. Text before the first label is
/// ignored; label text runs until the next label and is trimmed.
///
/// Throws ParseError when no label is found, a question has no answer, an
/// answer has no question, or any text is blank. A pair count outside
/// [4, 5] throws when `strict`, otherwise adds a warning.
QAParseResult parse_qa(std::string_view text, bool strict);

/// Canonical layout: "Question: q\nAnswer: a\n" per pair, pairs separated by
/// a blank line. parse_qa(render_qa(p)) == p for trimmed label-free text.
std::string render_qa(const std::vector<QAPair>& pairs);

struct LintViolation {
  std::string rule_id;       // MAGNIFICATION, DATE or META_PHRASE
  std::size_t pair_index;    // 0-based
  std::string field;         // "question" or "answer"
  std::size_t begin;         // byte span [begin, end) within that field
  std::size_t end;
  std::string excerpt;
};

struct LintReport {
  std::vector<LintViolation> violations;
  bool clean() const noexcept { return violations.empty(); }
};

/// Rule hits inside one string; pair_index and field are left empty/zero.
std::vector<LintViolation> lint_text(std::string_view text);

LintReport lint_qa(const std::vector<QAPair>& pairs);

}  // namespace clover::gen
