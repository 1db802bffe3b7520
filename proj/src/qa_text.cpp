// SPDX-License-Identifier: Apache-2.0
#include "clover/qa_text.hpp"

#include <regex>

#include <fmt/format.h>

#include "clover/error.hpp"
#include "clover/util.hpp"

namespace clover::gen {

namespace {

enum class LabelKind { question, answer };

struct Label {
  LabelKind kind;
  std::size_t label_begin;  // start of the label, including list markers
  std::size_t text_begin;   // first byte after the colon
};

const std::regex& line_label_re() {
  static const std::regex re(
      R"(^[ \t]*(?:(?:\d+[.)]|[-*])[ \t]*)?)"
      R"((?:\*\*(Question|Answer|Q|A)(?:[ \t]*\d+)?[ \t]*(?::\*\*|\*\*[ \t]*:)|(Question|Answer|Q|A)(?:[ \t]*\d+)?[ \t]*:))",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& inline_label_re() {
  static const std::regex re(R"(\b(Question|Answer)[ \t]*:)");
  return re;
}

LabelKind kind_of(const std::string& token) {
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(token.front())));
  return c == 'q' ? LabelKind::question : LabelKind::answer;
}

std::vector<Label> find_labels(std::string_view text) {
  std::vector<Label> labels;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const std::string line(text.substr(line_start, line_end - line_start));

    std::size_t scan_from = 0;
    std::smatch m;
    if (std::regex_search(line, m, line_label_re())) {
      const int g = m[1].matched ? 1 : 2;
      labels.push_back(Label{kind_of(m.str(g)), line_start + static_cast<std::size_t>(m.position(0)),
                             line_start + static_cast<std::size_t>(m.length(0))});
      scan_from = static_cast<std::size_t>(m.length(0));
    }
    auto it = std::sregex_iterator(line.begin() + static_cast<std::ptrdiff_t>(scan_from), line.end(),
                                   inline_label_re());
    for (; it != std::sregex_iterator(); ++it) {
      const auto pos = scan_from + static_cast<std::size_t>(it->position(0));
      labels.push_back(Label{kind_of(it->str(1)), line_start + pos,
                             line_start + pos + static_cast<std::size_t>(it->length(0))});
    }
    if (line_end == text.size()) break;
    line_start = line_end + 1;
  }
  return labels;
}

}  // namespace

QAParseResult parse_qa(std::string_view text, bool strict) {
  const auto labels = find_labels(text);
  if (labels.empty()) {
    throw ParseError(fmt::format("no Question/Answer labels found in: \"{}\"", text.substr(0, 80)));
  }

  auto body = [&](std::size_t i) {
    const std::size_t end = i + 1 < labels.size() ? labels[i + 1].label_begin : text.size();
    return std::string(trim(text.substr(labels[i].text_begin, end - labels[i].text_begin)));
  };

  QAParseResult result;
  std::size_t i = 0;
  while (i < labels.size()) {
    const std::size_t pair_no = result.pairs.size() + 1;
    if (labels[i].kind == LabelKind::answer) {
      throw ParseError(fmt::format("pair {}: answer without a preceding question", pair_no));
    }
    if (i + 1 >= labels.size() || labels[i + 1].kind != LabelKind::answer) {
      throw ParseError(fmt::format("question {} has no answer", pair_no));
    }
    QAPair pair{body(i), body(i + 1)};
    if (pair.question.empty()) throw ParseError(fmt::format("pair {}: empty question", pair_no));
    if (pair.answer.empty()) throw ParseError(fmt::format("pair {}: empty answer", pair_no));
    result.pairs.push_back(std::move(pair));
    i += 2;
  }

  const auto n = result.pairs.size();
  if (n < kMinPairs || n > kMaxPairs) {
    const auto msg = fmt::format("expected {}-{} QA pairs, found {}", kMinPairs, kMaxPairs, n);
    if (strict) throw ParseError(msg);
    result.warnings.push_back(msg);
  }
  return result;
}

std::string render_qa(const std::vector<QAPair>& pairs) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += '\n';
    out += fmt::format("Question: {}\nAnswer: {}\n", pairs[i].question, pairs[i].answer);
  }
  return out;
}

std::vector<LintViolation> lint_text(std::string_view text) {
  struct Rule {
    const char* id;
    std::regex re;
  };
  static const std::vector<Rule> kRules = [] {
    const auto months =
        std::string("(?:January|February|March|April|May|June|July|August|September|October|November|December|"
                    "Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec)");
    std::vector<Rule> rules;
    // 40x, 40 x, 40×, 2.5x; x40 only when followed by "magnification".
    rules.push_back({"MAGNIFICATION",
                     std::regex(R"(\b\d+(?:\.\d+)?[ ]?(?:[xX]|\xC3\x97)(?![A-Za-z0-9])|\b[xX]\d+(?=\s+magnification))")});
    rules.push_back({"DATE", std::regex(R"(\b(?:1[89]|20)\d{2}\b|\b)" + months +
                                        R"(\.?\s+\d{1,2}(?:st|nd|rd|th)?\b|\b\d{1,2}(?:st|nd|rd|th)?\s+)" +
                                        months + R"(\b)")});
    rules.push_back({"META_PHRASE", std::regex(R"(\b(?:mention|title|context|narrator)[a-z]*)",
                                               std::regex::ECMAScript | std::regex::icase)});
    return rules;
  }();

  std::vector<LintViolation> out;
  const std::string s(text);
  for (const auto& rule : kRules) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), rule.re); it != std::sregex_iterator(); ++it) {
      const auto b = static_cast<std::size_t>(it->position(0));
      const auto e = b + static_cast<std::size_t>(it->length(0));
      out.push_back(LintViolation{rule.id, 0, {}, b, e, it->str(0)});
    }
  }
  return out;
}

LintReport lint_qa(const std::vector<QAPair>& pairs) {
  LintReport report;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const auto* field : {"question", "answer"}) {
      const auto& text = std::string_view(field) == "question" ? pairs[i].question : pairs[i].answer;
      for (auto v : lint_text(text)) {
        v.pair_index = i;
        v.field = field;
        report.violations.push_back(std::move(v));
      }
    }
  }
  return report;
}

}  // namespace clover::gen
