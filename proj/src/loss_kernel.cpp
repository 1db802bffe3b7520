// SPDX-License-Identifier: Apache-2.0
#include "clover/loss_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::loss {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void check_unit_rows(const std::vector<double>& data, std::size_t dim, const char* what) {
  for (std::size_t r = 0; r * dim < data.size(); ++r) {
    std::span<const double> row(data.data() + r * dim, dim);
    const double norm = std::sqrt(dot(row, row));
    if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
      throw InvalidArgument(fmt::format("{} row {} has L2 norm {:.9f}, expected 1", what, r, norm));
    }
  }
}

void check_square(const Matrix& sim, double temperature) {
  if (sim.rows != sim.cols) throw InvalidArgument("similarity matrix must be square");
  if (sim.rows < 2) throw InvalidArgument("contrastive loss needs a batch of at least 2");
  if (!(temperature > 0)) throw InvalidArgument("temperature must be positive");
}

double clamp_prob(double p) { return std::max(p, kProbFloor); }

json tensor_json(const std::vector<std::size_t>& shape, const std::vector<double>& data) {
  return json{{"shape", shape}, {"data", data}};
}

}  // namespace

EmbeddingBatch::EmbeddingBatch(std::size_t batch, std::size_t queries, std::size_t dim,
                               std::vector<double> query_embeddings, std::vector<double> text_embeddings)
    : batch_(batch), queries_(queries), dim_(dim), query_(std::move(query_embeddings)),
      text_(std::move(text_embeddings)) {
  if (batch_ == 0 || queries_ == 0 || dim_ == 0) throw InvalidArgument("embedding batch dimensions must be positive");
  if (query_.size() != batch_ * queries_ * dim_) {
    throw InvalidArgument(fmt::format("query embeddings hold {} values, shape needs {}", query_.size(),
                                      batch_ * queries_ * dim_));
  }
  if (text_.size() != batch_ * dim_) {
    throw InvalidArgument(fmt::format("text embeddings hold {} values, shape needs {}", text_.size(), batch_ * dim_));
  }
  check_unit_rows(query_, dim_, "query embedding");
  check_unit_rows(text_, dim_, "text embedding");
}

EmbeddingBatch EmbeddingBatch::from_json(const json& j) {
  try {
    const auto qs = j.at("query_embeddings").at("shape").get<std::vector<std::size_t>>();
    const auto ts = j.at("text_embeddings").at("shape").get<std::vector<std::size_t>>();
    if (qs.size() != 3 || ts.size() != 2) throw ParseError("expected shapes [B,Nq,D] and [B,D]");
    if (ts[0] != qs[0] || ts[1] != qs[2]) throw ParseError("query and text embedding shapes disagree");
    return EmbeddingBatch(qs[0], qs[1], qs[2], j.at("query_embeddings").at("data").get<std::vector<double>>(),
                          j.at("text_embeddings").at("data").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad embedding fixture: {}", e.what()));
  }
}

json EmbeddingBatch::to_json() const {
  return json{{"query_embeddings", tensor_json({batch_, queries_, dim_}, query_)},
              {"text_embeddings", tensor_json({batch_, dim_}, text_)}};
}

Matrix similarity_matrix(const EmbeddingBatch& batch, Pooling pooling) {
  const auto b = batch.batch();
  Matrix s(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      double acc = pooling == Pooling::max ? -std::numeric_limits<double>::infinity() : 0.0;
      for (std::size_t q = 0; q < batch.queries(); ++q) {
        const double d = dot(batch.query(i, q), batch.text(j));
        acc = pooling == Pooling::max ? std::max(acc, d) : acc + d;
      }
      s(i, j) = pooling == Pooling::max ? acc : acc / static_cast<double>(batch.queries());
    }
  }
  return s;
}

double itc_from_similarities(const Matrix& sim, double temperature) {
  check_square(sim, temperature);
  const auto b = sim.rows;
  auto z = [&](std::size_t i, std::size_t j) { return sim(i, j) / temperature; };

  double row_ce = 0, col_ce = 0;
  for (std::size_t i = 0; i < b; ++i) {
    double mr = -std::numeric_limits<double>::infinity(), mc = mr;
    for (std::size_t j = 0; j < b; ++j) {
      mr = std::max(mr, z(i, j));
      mc = std::max(mc, z(j, i));
    }
    double sr = 0, sc = 0;
    for (std::size_t j = 0; j < b; ++j) {
      sr += std::exp(z(i, j) - mr);
      sc += std::exp(z(j, i) - mc);
    }
    row_ce += mr + std::log(sr) - z(i, i);
    col_ce += mc + std::log(sc) - z(i, i);
  }
  return 0.5 * (row_ce + col_ce) / static_cast<double>(b);
}

Matrix itc_similarity_gradient(const Matrix& sim, double temperature) {
  check_square(sim, temperature);
  const auto b = sim.rows;
  Matrix row_sm(b, b), col_sm(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    double mr = -std::numeric_limits<double>::infinity(), mc = mr;
    for (std::size_t j = 0; j < b; ++j) {
      mr = std::max(mr, sim(i, j) / temperature);
      mc = std::max(mc, sim(j, i) / temperature);
    }
    double sr = 0, sc = 0;
    for (std::size_t j = 0; j < b; ++j) {
      row_sm(i, j) = std::exp(sim(i, j) / temperature - mr);
      col_sm(j, i) = std::exp(sim(j, i) / temperature - mc);
      sr += row_sm(i, j);
      sc += col_sm(j, i);
    }
    for (std::size_t j = 0; j < b; ++j) {
      row_sm(i, j) /= sr;
      col_sm(j, i) /= sc;
    }
  }
  Matrix g(b, b);
  const double scale = 1.0 / (2.0 * static_cast<double>(b) * temperature);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double diag = i == j ? 2.0 : 0.0;
      g(i, j) = scale * (row_sm(i, j) + col_sm(i, j) - diag);
    }
  }
  return g;
}

double itc_loss(const EmbeddingBatch& batch, double temperature, Pooling pooling) {
  if (batch.batch() < 2) throw InvalidArgument("contrastive loss needs a batch of at least 2");
  return itc_from_similarities(similarity_matrix(batch, pooling), temperature);
}

void TokenLogits::validate() const {
  if (stepwise_probs.empty()) throw InvalidArgument("token sequence is empty");
  if (stepwise_probs.size() != answer_ids.size()) {
    throw InvalidArgument(fmt::format("{} probability vectors for {} answer ids", stepwise_probs.size(),
                                      answer_ids.size()));
  }
  for (std::size_t i = 0; i < stepwise_probs.size(); ++i) {
    const auto& p = stepwise_probs[i];
    if (answer_ids[i] >= p.size()) {
      throw InvalidArgument(fmt::format("answer id {} at position {} outside vocabulary of {}", answer_ids[i], i,
                                        p.size()));
    }
    double sum = 0;
    for (double v : p) {
      if (!(v >= 0)) throw InvalidArgument(fmt::format("negative or NaN probability at position {}", i));
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidArgument(fmt::format("probabilities at position {} sum to {:.12f}", i, sum));
    }
  }
}

std::vector<double> TokenLogits::realized() const {
  validate();
  std::vector<double> out(answer_ids.size());
  for (std::size_t i = 0; i < answer_ids.size(); ++i) out[i] = stepwise_probs[i][answer_ids[i]];
  return out;
}

double nll_of_realized(std::span<const double> realized) {
  if (realized.empty()) throw InvalidArgument("token sequence is empty");
  double nll = 0;
  for (double p : realized) nll -= std::log(clamp_prob(p));
  return nll;
}

std::vector<double> nll_realized_gradient(std::span<const double> realized) {
  std::vector<double> g(realized.size());
  for (std::size_t i = 0; i < realized.size(); ++i) g[i] = realized[i] > kProbFloor ? -1.0 / realized[i] : 0.0;
  return g;
}

double itg_nll(const TokenLogits& logits) { return nll_of_realized(logits.realized()); }

double eq1_likelihood(const TokenLogits& logits) {
  double prod = 1.0;
  for (double p : logits.realized()) prod *= clamp_prob(p);
  return prod;
}

namespace {

void check_match(const MatchBatch& batch) {
  if (batch.match_probs.size() != batch.labels.size()) {
    throw InvalidArgument(fmt::format("{} match probabilities for {} labels", batch.match_probs.size(),
                                      batch.labels.size()));
  }
  if (batch.match_probs.empty()) throw InvalidArgument("match batch is empty");
  for (std::size_t k = 0; k < batch.labels.size(); ++k) {
    if (batch.labels[k] != 0 && batch.labels[k] != 1) throw InvalidArgument(fmt::format("label {} is not 0/1", k));
    const double p = batch.match_probs[k];
    if (!(p >= 0 && p <= 1)) throw InvalidArgument(fmt::format("match probability {} outside [0,1]", k));
  }
}

double clamp_open(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

}  // namespace

double itm_loss(const MatchBatch& batch) {
  check_match(batch);
  double sum = 0;
  for (std::size_t k = 0; k < batch.labels.size(); ++k) {
    const double p = clamp_open(batch.match_probs[k]);
    sum += batch.labels[k] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(batch.labels.size());
}

std::vector<double> itm_gradient(const MatchBatch& batch) {
  check_match(batch);
  const auto n = static_cast<double>(batch.labels.size());
  std::vector<double> g(batch.labels.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double p = clamp_open(batch.match_probs[k]);
    g[k] = (p - batch.labels[k]) / (p * (1.0 - p) * n);
  }
  return g;
}

}  // namespace clover::loss
