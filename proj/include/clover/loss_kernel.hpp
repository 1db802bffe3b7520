// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clover/util.hpp"

namespace clover::loss {

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-6;

/// Dense row-major matrix, just enough for similarity logits and gradients.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Visual-query embeddings [B, Nq, D] and text embeddings [B, D], every row
/// unit-normalized (checked on construction).
class EmbeddingBatch {
 public:
  EmbeddingBatch(std::size_t batch, std::size_t queries, std::size_t dim, std::vector<double> query_embeddings,
                 std::vector<double> text_embeddings);

  std::size_t batch() const noexcept { return batch_; }
  std::size_t queries() const noexcept { return queries_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> query(std::size_t item, std::size_t q) const {
    return {query_.data() + (item * queries_ + q) * dim_, dim_};
  }
  std::span<const double> text(std::size_t item) const { return {text_.data() + item * dim_, dim_}; }

  const std::vector<double>& query_data() const noexcept { return query_; }
  const std::vector<double>& text_data() const noexcept { return text_; }

  /// {"query_embeddings": {"shape": [B,Nq,D], "data": [...]},
  ///  "text_embeddings": {"shape": [B,D], "data": [...]}}
  static EmbeddingBatch from_json(const json& j);
  json to_json() const;

 private:
  std::size_t batch_, queries_, dim_;
  std::vector<double> query_, text_;
};

enum class Pooling { max, mean };

/// s(i, j) = pooled over queries q of dot(query(i, q), text(j)).
Matrix similarity_matrix(const EmbeddingBatch& batch, Pooling pooling);

/// Symmetric InfoNCE over a square similarity matrix:
/// 0.5 * (mean row cross-entropy + mean column cross-entropy) of
/// softmax(s / temperature) against the diagonal.
double itc_from_similarities(const Matrix& sim, double temperature);

/// d itc_from_similarities / d s(i, j) =
/// (softmax_row_i(j) + softmax_col_j(i) - 2 [i == j]) / (2 B temperature).
Matrix itc_similarity_gradient(const Matrix& sim, double temperature);

double itc_loss(const EmbeddingBatch& batch, double temperature, Pooling pooling = Pooling::max);

/// Per-position probability vectors and the realized token at each position.
struct TokenLogits {
  std::vector<std::vector<double>> stepwise_probs;
  std::vector<std::size_t> answer_ids;

  /// Non-empty, matching lengths, ids in range, each vector non-negative and
  /// summing to 1 within 1e-9.
  void validate() const;

  /// stepwise_probs[i][answer_ids[i]] for each position.
  std::vector<double> realized() const;
};

/// -sum_i ln(max(p_i, floor)) over realized-token probabilities.
double itg_nll(const TokenLogits& logits);
double nll_of_realized(std::span<const double> realized);
/// d nll / d p_i = -1 / p_i above the floor, 0 below it.
std::vector<double> nll_realized_gradient(std::span<const double> realized);

/// Product of realized-token probabilities (sequence likelihood).
double eq1_likelihood(const TokenLogits& logits);

struct MatchBatch {
  std::vector<double> match_probs;
  std::vector<int> labels;
};

/// Mean binary cross-entropy with probabilities clamped to [floor, 1 - floor].
double itm_loss(const MatchBatch& batch);
/// d itm_loss / d p_k = (p_k - y_k) / (p_k (1 - p_k) n).
std::vector<double> itm_gradient(const MatchBatch& batch);

}  // namespace clover::loss
