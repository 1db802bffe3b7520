// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "clover/error.hpp"
#include "clover/qa_text.hpp"
#include "clover/util.hpp"
#include "support/fixtures.hpp"

using namespace clover;
using namespace clover::gen;

namespace {

std::vector<std::string> rules_of(const std::string& text) {
  std::vector<std::string> ids;
  for (const auto& v : lint_text(text)) ids.push_back(v.rule_id);
  return ids;
}

}  // namespace

TEST(ParseQa, CanonicalText) {
  const auto r = parse_qa(clover::testing::clean_qa_text(), true);
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs[0].question, "What type of tissue is visible in the image?");
  EXPECT_EQ(r.pairs[3].answer, "Focal necrosis is present near the surface. A pathologist should confirm the findings.");
  EXPECT_TRUE(r.warnings.empty());
}

TEST(ParseQa, WorkedExampleFromGolden) {
  const auto text = read_file(clover::testing::test_dir() / "golden" / "worked_example_qa.txt");
  const auto r = parse_qa(text, true);
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs[0].question, "What is the described condition?");
  EXPECT_EQ(r.pairs[3].question, "What staining technique was used to visualize the H. pylori organisms?");
  EXPECT_NE(r.pairs[3].answer.find("Hematoxylin and Eosin (H&E)"), std::string::npos);
}

TEST(ParseQa, LabelVariants) {
  const std::string text =
      "Here are the pairs:\n"
      "1. **Question 1:** What is seen?\n"
      "**Answer 1:** Glands.\n"
      "2) Q: Any necrosis?\n"
      "A: None\nvisible.\n"
      "- question: Stroma?\n"
      "- answer: Fibrotic.\n"
      "Question: Last? Answer: Inline answer.\n";
  const auto r = parse_qa(text, true);
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs[0].question, "What is seen?");
  EXPECT_EQ(r.pairs[0].answer, "Glands.");
  EXPECT_EQ(r.pairs[1].answer, "None\nvisible.");
  EXPECT_EQ(r.pairs[2].question, "Stroma?");
  EXPECT_EQ(r.pairs[3].question, "Last?");
  EXPECT_EQ(r.pairs[3].answer, "Inline answer.");
}

TEST(ParseQa, BoldTextAfterPlainLabelIsKept) {
  const auto r = parse_qa("Question: **Bold** part?\nAnswer: *emphasis* here\n", false);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].question, "**Bold** part?");
  EXPECT_EQ(r.pairs[0].answer, "*emphasis* here");
}

TEST(ParseQa, PairCountPolicy) {
  const std::string three = "Question: a\nAnswer: b\nQuestion: c\nAnswer: d\nQuestion: e\nAnswer: f\n";
  EXPECT_THROW(parse_qa(three, true), ParseError);
  const auto lenient = parse_qa(three, false);
  EXPECT_EQ(lenient.pairs.size(), 3u);
  ASSERT_EQ(lenient.warnings.size(), 1u);
  EXPECT_NE(lenient.warnings[0].find("found 3"), std::string::npos);
}

TEST(ParseQa, ErrorsNameTheProblem) {
  try {
    parse_qa("just some prose without labels", false);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("just some prose"), std::string::npos);
  }
  try {
    parse_qa("Question: a\nAnswer: b\nQuestion: dangling\n", false);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("question 2 has no answer"), std::string::npos);
  }
  EXPECT_THROW(parse_qa("Question: a\nAnswer:   \n", false), ParseError);
  EXPECT_THROW(parse_qa("Answer: orphan\n", false), ParseError);
}

TEST(RenderQa, RoundTrip) {
  const std::vector<QAPair> pairs{{"What?", "This: that."}, {"Où?", "Ici, 5 µm."}, {"Q3?", "A3"}, {"Q4?", "A4"}};
  EXPECT_EQ(parse_qa(render_qa(pairs), true).pairs, pairs);
}

TEST(Lint, Magnification) {
  EXPECT_EQ(rules_of("seen at 40x"), std::vector<std::string>{"MAGNIFICATION"});
  EXPECT_EQ(rules_of("seen at 40 X"), std::vector<std::string>{"MAGNIFICATION"});
  EXPECT_EQ(rules_of("high power 400\xC3\x97 view"), std::vector<std::string>{"MAGNIFICATION"});
  EXPECT_EQ(rules_of("x40 magnification"), std::vector<std::string>{"MAGNIFICATION"});
  EXPECT_TRUE(rules_of("a 3xl shirt and the x40 field").empty());
  EXPECT_TRUE(rules_of("0x1F is hex").empty());
}

TEST(Lint, Dates) {
  EXPECT_EQ(rules_of("biopsied in 2019"), std::vector<std::string>{"DATE"});
  EXPECT_EQ(rules_of("on March 3rd"), std::vector<std::string>{"DATE"});
  EXPECT_EQ(rules_of("on 12 Dec"), std::vector<std::string>{"DATE"});
  EXPECT_TRUE(rules_of("about 2500 cells and 120 mitoses").empty());
}

TEST(Lint, MetaPhrases) {
  EXPECT_EQ(rules_of("As mentioned in the caption"), std::vector<std::string>{"META_PHRASE"});
  EXPECT_EQ(rules_of("The Narrator says"), std::vector<std::string>{"META_PHRASE"});
  EXPECT_EQ(rules_of("in this context"), std::vector<std::string>{"META_PHRASE"});
  EXPECT_TRUE(rules_of("in the image, the glands are crowded").empty());
}

TEST(Lint, SpansPointIntoField) {
  const std::vector<QAPair> pairs{{"Clean?", "Yes"}, {"At what power?", "It is shown at 20x in the image."}};
  const auto report = lint_qa(pairs);
  ASSERT_EQ(report.violations.size(), 1u);
  const auto& v = report.violations[0];
  EXPECT_EQ(v.pair_index, 1u);
  EXPECT_EQ(v.field, "answer");
  EXPECT_EQ(pairs[1].answer.substr(v.begin, v.end - v.begin), "20x");
  EXPECT_EQ(v.excerpt, "20x");
  EXPECT_TRUE(lint_qa(parse_qa(clover::testing::clean_qa_text(), true).pairs).clean());
}
