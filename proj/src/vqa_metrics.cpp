// SPDX-License-Identifier: Apache-2.0
#include "clover/vqa_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::metrics {

std::string_view to_string(QuestionType t) { return t == QuestionType::open ? "open" : "closed"; }

QuestionType parse_question_type(std::string_view s) {
  if (s == "open") return QuestionType::open;
  if (s == "closed") return QuestionType::closed;
  throw ParseError(fmt::format("unknown qtype '{}' (expected open or closed)", s));
}

std::vector<std::string> normalize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : b) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : a) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return overlap;
}

namespace {

std::vector<std::string> reference_tokens(std::string_view reference) {
  auto tokens = normalize(reference);
  if (tokens.empty()) {
    throw InvalidArgument(fmt::format("reference \"{}\" has no tokens; example is undefined", reference));
  }
  return tokens;
}

bool contains(const std::vector<std::string>& tokens, std::string_view t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

double open_recall(std::string_view reference, std::string_view prediction) {
  const auto ref = reference_tokens(reference);
  return static_cast<double>(multiset_overlap(ref, normalize(prediction))) / static_cast<double>(ref.size());
}

Prf prf(std::string_view reference, std::string_view prediction) {
  const auto ref = reference_tokens(reference);
  const auto pred = normalize(prediction);
  const auto overlap = static_cast<double>(multiset_overlap(ref, pred));
  Prf out;
  out.recall = overlap / static_cast<double>(ref.size());
  out.precision = pred.empty() ? 0.0 : overlap / static_cast<double>(pred.size());
  const double sum = out.recall + out.precision;
  out.f1 = sum > 0 ? 2 * out.precision * out.recall / sum : 0.0;
  return out;
}

std::string reference_polarity(std::string_view reference, const PolarityPair& pair) {
  const auto ref = normalize(reference);
  const bool has_first = contains(ref, pair.first);
  const bool has_second = contains(ref, pair.second);
  if (has_first == has_second) {
    throw InvalidArgument(fmt::format("closed reference \"{}\" must contain exactly one of '{}'/'{}'", reference,
                                      pair.first, pair.second));
  }
  return has_first ? pair.first : pair.second;
}

bool closed_correct(std::string_view reference, std::string_view prediction, const PolarityPair& pair) {
  const auto want = reference_polarity(reference, pair);
  const auto& other = want == pair.first ? pair.second : pair.first;
  const auto pred = normalize(prediction);
  return contains(pred, want) && !contains(pred, other);
}

double closed_accuracy(const std::vector<EvalExample>& examples, const PolarityPair& pair) {
  if (examples.empty()) throw InvalidArgument("closed_accuracy: no examples");
  std::size_t correct = 0;
  for (const auto& e : examples) {
    if (e.qtype != QuestionType::closed) {
      throw InvalidArgument(fmt::format("closed_accuracy: example '{}' is not closed", e.example_id));
    }
    if (closed_correct(e.reference, e.prediction, pair)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size());
}

LengthStats length_stats(const std::vector<EvalExample>& examples) {
  if (examples.empty()) throw InvalidArgument("length_stats: no examples");
  double ref = 0, pred = 0;
  for (const auto& e : examples) {
    ref += static_cast<double>(word_count(e.reference));
    pred += static_cast<double>(word_count(e.prediction));
  }
  const auto n = static_cast<double>(examples.size());
  return LengthStats{ref / n, pred / n};
}

double cost_ratio(double metric_pct, std::int64_t trainable_params) {
  if (trainable_params <= 1'000'000) {
    throw DomainError(fmt::format("trainable parameter count must exceed 1e6, got {}", trainable_params));
  }
  return metric_pct / std::log10(static_cast<double>(trainable_params) / 1e6);
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

MetricsReport evaluate(const std::vector<EvalExample>& examples, const EvalOptions& options) {
  if (examples.empty()) throw InvalidArgument("evaluate: no examples");
  MetricsReport r;
  std::vector<double> recalls, precisions, f1s;
  std::size_t correct = 0;

  for (const auto& e : examples) {
    ExampleScore s{e.example_id, e.qtype, {}, {}, {}, {}, word_count(e.reference), word_count(e.prediction)};
    if (e.qtype == QuestionType::open) {
      Prf p;
      try {
        p = prf(e.reference, e.prediction);
      } catch (const InvalidArgument& ex) {
        r.warnings.push_back(fmt::format("{}: excluded ({})", e.example_id, ex.what()));
        r.per_example.push_back(std::move(s));
        continue;
      }
      s.recall = p.recall;
      s.precision = p.precision;
      s.f1 = p.f1;
      recalls.push_back(p.recall);
      precisions.push_back(p.precision);
      f1s.push_back(p.f1);
      ++r.n_open;
    } else {
      s.correct = closed_correct(e.reference, e.prediction, options.polarity);
      if (*s.correct) ++correct;
      ++r.n_closed;
    }
    r.per_example.push_back(std::move(s));
  }

  if (r.n_closed > 0) {
    r.closed_accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(r.n_closed);
  }
  if (r.n_open > 0) {
    r.recall_pct = 100.0 * mean(recalls);
    r.open_recall_pct = r.recall_pct;
    r.precision_pct = 100.0 * mean(precisions);
    r.f1_pct = 100.0 * mean(f1s);
    const double sum = *r.recall_pct + *r.precision_pct;
    r.f1_of_means_pct = sum > 0 ? 2 * *r.recall_pct * *r.precision_pct / sum : 0.0;
  }
  const auto lens = length_stats(examples);
  r.mean_ref_len = lens.mean_ref_len;
  r.mean_pred_len = lens.mean_pred_len;

  if (options.trainable_params) {
    CostRatios c;
    c.trainable_params = *options.trainable_params;
    auto ratio = [&](const std::optional<double>& m) -> std::optional<double> {
      if (!m) return std::nullopt;
      return cost_ratio(*m, c.trainable_params);
    };
    c.closed_accuracy = ratio(r.closed_accuracy_pct);
    c.open_recall = ratio(r.open_recall_pct);
    c.precision = ratio(r.precision_pct);
    c.f1 = ratio(r.f1_pct);
    r.cost = c;
  }
  return r;
}

json example_to_json(const EvalExample& e) {
  return json{{"example_id", e.example_id},
              {"question", e.question},
              {"reference", e.reference},
              {"prediction", e.prediction},
              {"qtype", to_string(e.qtype)}};
}

EvalExample example_from_json(const json& j, std::size_t line) {
  try {
    EvalExample e;
    e.example_id = j.at("example_id").get<std::string>();
    e.question = j.value("question", "");
    e.reference = j.at("reference").get<std::string>();
    e.prediction = j.value("prediction", "");
    e.qtype = parse_question_type(j.at("qtype").get<std::string>());
    if (trim(e.reference).empty()) throw ParseError(fmt::format("example '{}' has empty reference", e.example_id), line);
    return e;
  } catch (const json::exception& ex) {
    throw ParseError(fmt::format("bad eval example: {}", ex.what()), line);
  }
}

std::vector<EvalExample> read_examples(const std::filesystem::path& path) {
  std::vector<EvalExample> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) { out.push_back(example_from_json(j, line)); });
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", round2(*v)) : "-"; }

}  // namespace

json to_json(const MetricsReport& r) {
  json j{{"closed_accuracy_pct", opt(r.closed_accuracy_pct)},
         {"open_recall_pct", opt(r.open_recall_pct)},
         {"recall_pct", opt(r.recall_pct)},
         {"precision_pct", opt(r.precision_pct)},
         {"f1_pct", opt(r.f1_pct)},
         {"f1_of_means_pct", opt(r.f1_of_means_pct)},
         {"mean_ref_len", r.mean_ref_len},
         {"mean_pred_len", r.mean_pred_len},
         {"n_open", r.n_open},
         {"n_closed", r.n_closed},
         {"warnings", r.warnings}};
  if (r.cost) {
    j["cost_ratio"] = {{"trainable_params", r.cost->trainable_params},
                       {"closed_accuracy", opt(r.cost->closed_accuracy)},
                       {"open_recall", opt(r.cost->open_recall)},
                       {"precision", opt(r.cost->precision)},
                       {"f1", opt(r.cost->f1)}};
  }
  json per = json::array();
  for (const auto& s : r.per_example) {
    json e{{"example_id", s.example_id}, {"qtype", to_string(s.qtype)}, {"ref_len", s.ref_len},
           {"pred_len", s.pred_len}};
    if (s.qtype == QuestionType::open) {
      e["recall"] = opt(s.recall);
      e["precision"] = opt(s.precision);
      e["f1"] = opt(s.f1);
    } else {
      e["correct"] = s.correct ? json(*s.correct) : json(nullptr);
    }
    per.push_back(std::move(e));
  }
  j["per_example"] = std::move(per);
  return j;
}

std::string format_table(const MetricsReport& r) {
  std::string out;
  auto row = [&](std::string_view name, const std::string& value, const std::string& ratio) {
    out += fmt::format("{:<22}{:>10}{:>14}\n", name, value, ratio);
  };
  row("metric", "value", "/ log(pt)");
  auto ratio = [&](std::optional<double> CostRatios::*field) {
    return r.cost ? cell(r.cost.value().*field) : std::string("-");
  };
  row("closed accuracy (%)", cell(r.closed_accuracy_pct), ratio(&CostRatios::closed_accuracy));
  row("open recall (%)", cell(r.open_recall_pct), ratio(&CostRatios::open_recall));
  row("precision (%)", cell(r.precision_pct), ratio(&CostRatios::precision));
  row("f1 (%)", cell(r.f1_pct), ratio(&CostRatios::f1));
  row("mean ref length", fmt::format("{:.2f}", r.mean_ref_len), "");
  row("mean pred length", fmt::format("{:.2f}", r.mean_pred_len), "");
  row("n open / closed", fmt::format("{}/{}", r.n_open, r.n_closed), "");
  return out;
}

}  // namespace clover::metrics
