// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clover/util.hpp"

namespace clover::metrics {

enum class QuestionType { open, closed };

std::string_view to_string(QuestionType t);
QuestionType parse_question_type(std::string_view s);

struct EvalExample {
  std::string example_id;
  std::string question;
  std::string reference;
  std::string prediction;
  QuestionType qtype = QuestionType::open;
};

/// Lowercased tokens split on every run of non-alphanumeric ASCII. Bytes of
/// multi-byte UTF-8 sequences count as token characters.
std::vector<std::string> normalize(std::string_view text);

/// Duplicate-aware overlap: sum over tokens of min(count in a, count in b).
std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Fraction of reference tokens (with multiplicity) found in the prediction.
/// Throws InvalidArgument when the reference has no tokens.
double open_recall(std::string_view reference, std::string_view prediction);

struct Prf {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

Prf prf(std::string_view reference, std::string_view prediction);

/// The two answer tokens a closed question is scored on; `first` is the
/// positive/affirmative side only by convention.
struct PolarityPair {
  std::string first = "yes";
  std::string second = "no";
};

/// The single pair token present in the normalized reference. Throws
/// InvalidArgument when neither or both appear.
std::string reference_polarity(std::string_view reference, const PolarityPair& pair = {});

/// Prediction contains the reference's polarity token and not the opposite one.
bool closed_correct(std::string_view reference, std::string_view prediction, const PolarityPair& pair = {});

/// 100 * correct / n. Throws on an empty list or a non-closed example.
double closed_accuracy(const std::vector<EvalExample>& examples, const PolarityPair& pair = {});

struct LengthStats {
  double mean_ref_len = 0;
  double mean_pred_len = 0;
};

/// Means of whitespace word counts. Throws on an empty list.
LengthStats length_stats(const std::vector<EvalExample>& examples);

/// metric_pct / log10(trainable_params / 1e6). Throws DomainError unless
/// trainable_params > 1e6.
double cost_ratio(double metric_pct, std::int64_t trainable_params);

/// Half-away-from-zero rounding to two decimals, as printed in reports.
double round2(double x);

struct ExampleScore {
  std::string example_id;
  QuestionType qtype;
  std::optional<double> recall, precision, f1;  // open only
  std::optional<bool> correct;                  // closed only
  std::size_t ref_len = 0, pred_len = 0;
};

struct CostRatios {
  std::int64_t trainable_params = 0;
  std::optional<double> closed_accuracy, open_recall, precision, f1;
};

struct MetricsReport {
  std::optional<double> closed_accuracy_pct;
  std::optional<double> open_recall_pct;
  std::optional<double> recall_pct;
  std::optional<double> precision_pct;
  /// Mean of per-example F1.
  std::optional<double> f1_pct;
  /// Harmonic mean of recall_pct and precision_pct.
  std::optional<double> f1_of_means_pct;
  double mean_ref_len = 0;
  double mean_pred_len = 0;
  std::size_t n_open = 0;
  std::size_t n_closed = 0;
  std::optional<CostRatios> cost;
  std::vector<ExampleScore> per_example;
  std::vector<std::string> warnings;
};

struct EvalOptions {
  PolarityPair polarity;
  std::optional<std::int64_t> trainable_params;
};

/// Macro-averaged report. Open examples whose reference has no tokens are
/// excluded with a warning; fields for an absent question type stay empty.
MetricsReport evaluate(const std::vector<EvalExample>& examples, const EvalOptions& options = {});

std::vector<EvalExample> read_examples(const std::filesystem::path& path);
json example_to_json(const EvalExample& e);
EvalExample example_from_json(const json& j, std::size_t line = 0);

json to_json(const MetricsReport& r);
/// Plain-text table for terminals.
std::string format_table(const MetricsReport& r);

}  // namespace clover::metrics
