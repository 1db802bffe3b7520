// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "clover/error.hpp"
#include "clover/vqa_metrics.hpp"

namespace clover::metrics {
namespace {

using Tokens = std::vector<std::string>;

// Sorted-multiset intersection; independent of the hash-count overlap.
std::size_t oracle_overlap(Tokens a, Tokens b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  Tokens both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

std::string join(const Tokens& t) {
  std::string s;
  for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
  return s;
}

EvalExample open_ex(std::string id, std::string ref, std::string pred) {
  return {std::move(id), "q?", std::move(ref), std::move(pred), QuestionType::open};
}

EvalExample closed_ex(std::string id, std::string ref, std::string pred) {
  return {std::move(id), "q?", std::move(ref), std::move(pred), QuestionType::closed};
}

TEST(Normalize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(normalize("Yes, it is."), (Tokens{"yes", "it", "is"}));
  EXPECT_EQ(normalize("H&E stain"), (Tokens{"h", "e", "stain"}));
  EXPECT_TRUE(normalize("  ...  ").empty());
}

TEST(Normalize, IsIdempotent) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "abcXYZ019 ,.;:!?&-_()/\t\n";
  for (int i = 0; i < 300; ++i) {
    std::string s;
    const auto len = rng() % 40;
    for (std::size_t j = 0; j < len; ++j) s += alphabet[rng() % alphabet.size()];
    const auto once = normalize(s);
    EXPECT_EQ(normalize(join(once)), once) << s;
  }
}

TEST(OpenRecall, WorkedExample) {
  EXPECT_DOUBLE_EQ(open_recall("the arrows indicate inflammatory infiltrates", "arrows indicate inflammation"), 0.4);
}

TEST(OpenRecall, CountsDuplicatesOnce) {
  EXPECT_DOUBLE_EQ(open_recall("cell cell nucleus", "cell"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(open_recall("cell", "cell cell cell"), 1.0);
}

TEST(OpenRecall, EmptyReferenceIsRejected) {
  EXPECT_THROW(open_recall("?!", "anything"), InvalidArgument);
}

TEST(Prf, HalfOverlap) {
  const auto p = prf("gland crypt stroma mucosa", "gland crypt tumor necrosis");
  EXPECT_DOUBLE_EQ(p.recall, 0.5);
  EXPECT_DOUBLE_EQ(p.precision, 0.5);
  EXPECT_DOUBLE_EQ(p.f1, 0.5);
}

TEST(Prf, EmptyPredictionScoresZero) {
  const auto p = prf("gland", "");
  EXPECT_EQ(p.recall, 0.0);
  EXPECT_EQ(p.precision, 0.0);
  EXPECT_EQ(p.f1, 0.0);
}

TEST(Prf, RandomizedAgainstOracle) {
  std::mt19937_64 rng(11);
  const Tokens vocab{"a", "b", "c", "d", "e", "f", "g"};
  for (int i = 0; i < 500; ++i) {
    Tokens ref(1 + rng() % 8), pred(rng() % 9);
    for (auto& t : ref) t = vocab[rng() % vocab.size()];
    for (auto& t : pred) t = vocab[rng() % vocab.size()];
    const double ov = static_cast<double>(oracle_overlap(ref, pred));
    const auto p = prf(join(ref), join(pred));
    EXPECT_NEAR(p.recall, ov / ref.size(), 1e-12);
    EXPECT_NEAR(p.precision, pred.empty() ? 0.0 : ov / pred.size(), 1e-12);
    EXPECT_GE(p.f1, std::min(p.recall, p.precision) - 1e-12);
    EXPECT_LE(p.f1, std::max(p.recall, p.precision) + 1e-12);

    Tokens longer = pred;
    longer.push_back(vocab[rng() % vocab.size()]);
    EXPECT_GE(open_recall(join(ref), join(longer)), p.recall);
  }
}

TEST(Closed, ContradictoryPredictionIsWrong) {
  EXPECT_FALSE(closed_correct("no", "yes and no"));
  EXPECT_TRUE(closed_correct("No.", "No, there is none."));
  EXPECT_FALSE(closed_correct("yes", "It is unclear."));
}

TEST(Closed, ReferenceNeedsExactlyOnePolarity) {
  EXPECT_THROW(reference_polarity("maybe"), InvalidArgument);
  EXPECT_THROW(reference_polarity("yes or no"), InvalidArgument);
  EXPECT_EQ(reference_polarity("Yes."), "yes");
}

TEST(Closed, CustomPolarityPair) {
  const PolarityPair pair{"positive", "negative"};
  EXPECT_TRUE(closed_correct("positive", "The region is positive for tumor.", pair));
  EXPECT_FALSE(closed_correct("negative", "yes", pair));
}

TEST(Closed, NineOfTen) {
  std::vector<EvalExample> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(closed_ex(std::to_string(i), "yes", i < 9 ? "yes" : "no"));
  EXPECT_DOUBLE_EQ(closed_accuracy(xs), 90.0);
  EXPECT_THROW(closed_accuracy({}), InvalidArgument);
  EXPECT_THROW(closed_accuracy({open_ex("o", "a", "a")}), InvalidArgument);
}

TEST(Length, MeanWordCounts) {
  std::vector<EvalExample> xs{open_ex("a", std::string(17 * 2 - 1, ' '), "x"), open_ex("b", "", "x y")};
  Tokens w17(17, "w"), w19(19, "w");
  xs[0].reference = join(w17);
  xs[1].reference = join(w19);
  const auto s = length_stats(xs);
  EXPECT_DOUBLE_EQ(s.mean_ref_len, 18.0);
  EXPECT_DOUBLE_EQ(s.mean_pred_len, 1.5);
}

TEST(CostRatio, PublishedCells) {
  EXPECT_NEAR(round2(cost_ratio(83.90, 187'000'000)), 36.93, 1e-9);
  EXPECT_NEAR(round2(cost_ratio(88.00, 236'000'000)), 37.09, 1e-9);
  EXPECT_NEAR(round2(cost_ratio(84.63, 400'000'000)), 32.52, 1e-9);
  EXPECT_EQ(cost_ratio(0.0, 187'000'000), 0.0);
}

TEST(CostRatio, DomainIsAboveOneMillion) {
  EXPECT_THROW(cost_ratio(50.0, 1'000'000), DomainError);
  EXPECT_THROW(cost_ratio(50.0, 0), DomainError);
  EXPECT_NO_THROW(cost_ratio(50.0, 1'000'001));
}

TEST(Round2, HalfAwayFromZero) {
  EXPECT_DOUBLE_EQ(round2(1.125), 1.13);
  EXPECT_DOUBLE_EQ(round2(-1.125), -1.13);
  EXPECT_DOUBLE_EQ(round2(2.0), 2.0);
}

TEST(Evaluate, MacroAveragesOpenRecall) {
  const auto r = evaluate({open_ex("a", "gland", "gland"), open_ex("b", "gland", "stroma")});
  ASSERT_TRUE(r.open_recall_pct);
  EXPECT_DOUBLE_EQ(*r.open_recall_pct, 50.0);
  EXPECT_FALSE(r.closed_accuracy_pct);
  EXPECT_EQ(r.n_open, 2u);
  EXPECT_TRUE(to_json(r)["closed_accuracy_pct"].is_null());
}

TEST(Evaluate, OnlyClosedLeavesOpenFieldsEmpty) {
  const auto r = evaluate({closed_ex("a", "yes", "yes"), closed_ex("b", "no", "yes")});
  EXPECT_DOUBLE_EQ(*r.closed_accuracy_pct, 50.0);
  EXPECT_FALSE(r.open_recall_pct);
  EXPECT_FALSE(r.f1_pct);
  EXPECT_EQ(format_table(r).find("nan"), std::string::npos);
}

TEST(Evaluate, EmptyReferenceExcludedWithWarning) {
  const auto r = evaluate({open_ex("a", "gland", "gland"), open_ex("b", "...", "gland")});
  EXPECT_EQ(r.n_open, 1u);
  EXPECT_DOUBLE_EQ(*r.open_recall_pct, 100.0);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("b"), std::string::npos);
}

TEST(Evaluate, AggregatesRecomputableFromPerExample) {
  std::mt19937_64 rng(5);
  const Tokens vocab{"gland", "crypt", "tumor", "stroma", "mucosa"};
  std::vector<EvalExample> xs;
  for (int i = 0; i < 60; ++i) {
    Tokens ref(1 + rng() % 5), pred(rng() % 6);
    for (auto& t : ref) t = vocab[rng() % vocab.size()];
    for (auto& t : pred) t = vocab[rng() % vocab.size()];
    xs.push_back(open_ex(std::to_string(i), join(ref), join(pred)));
  }
  const auto r = evaluate(xs, {{}, 187'000'000});
  double rs = 0, ps = 0, fs = 0;
  for (const auto& s : r.per_example) {
    rs += *s.recall;
    ps += *s.precision;
    fs += *s.f1;
  }
  EXPECT_NEAR(*r.recall_pct, 100.0 * rs / 60, 1e-9);
  EXPECT_NEAR(*r.precision_pct, 100.0 * ps / 60, 1e-9);
  EXPECT_NEAR(*r.f1_pct, 100.0 * fs / 60, 1e-9);
  const double hm = 2 * *r.recall_pct * *r.precision_pct / (*r.recall_pct + *r.precision_pct);
  EXPECT_NEAR(*r.f1_of_means_pct, hm, 1e-9);
  ASSERT_TRUE(r.cost);
  EXPECT_NEAR(*r.cost->open_recall, *r.open_recall_pct / std::log10(187.0), 1e-9);
  EXPECT_FALSE(r.cost->closed_accuracy);
}

TEST(ExampleJson, RoundTripAndValidation) {
  const auto e = closed_ex("x1", "yes", "Yes it is");
  const auto back = example_from_json(example_to_json(e));
  EXPECT_EQ(back.example_id, "x1");
  EXPECT_EQ(back.qtype, QuestionType::closed);
  EXPECT_THROW(example_from_json(json{{"example_id", "a"}, {"reference", "x"}, {"qtype", "maybe"}}), ParseError);
  EXPECT_THROW(example_from_json(json{{"example_id", "a"}, {"reference", " "}, {"qtype", "open"}}), ParseError);
}

}  // namespace
}  // namespace clover::metrics
