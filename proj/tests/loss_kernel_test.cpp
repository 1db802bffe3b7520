// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "clover/error.hpp"
#include "clover/grad_check.hpp"
#include "clover/kernel_check.hpp"
#include "clover/loss_kernel.hpp"

namespace clover::loss {
namespace {

// Straight transcription of the symmetric InfoNCE formula, no shared helpers.
double oracle_itc(const Matrix& s, double tau) {
  const std::size_t b = s.rows;
  double rows = 0, cols = 0;
  for (std::size_t i = 0; i < b; ++i) {
    double zr = 0, zc = 0;
    for (std::size_t j = 0; j < b; ++j) {
      zr += std::exp(s(i, j) / tau);
      zc += std::exp(s(j, i) / tau);
    }
    rows += -std::log(std::exp(s(i, i) / tau) / zr);
    cols += -std::log(std::exp(s(i, i) / tau) / zc);
  }
  return 0.5 * (rows / b + cols / b);
}

std::vector<double> central_fd(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                               double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    x[k] = x0;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

Matrix square(std::size_t b, const std::vector<double>& v) {
  Matrix m(b, b);
  m.data = v;
  return m;
}

TokenLogits uniform_logits(std::size_t vocab, std::size_t n) {
  TokenLogits t;
  t.stepwise_probs.assign(n, std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)));
  t.answer_ids.assign(n, 0);
  return t;
}

// 2 items, 2 queries, 2 dims: item 0 has queries e1 and e2, item 1 has e2 twice.
EmbeddingBatch heterogeneous_batch() {
  return EmbeddingBatch(2, 2, 2, {1, 0, 0, 1, 0, 1, 0, 1}, {1, 0, 0, 1});
}

TEST(Itc, EqualSimilaritiesGiveLnB) {
  for (std::size_t b : {2u, 3u, 7u}) {
    const Matrix s(b, b, 0.3);
    EXPECT_NEAR(itc_from_similarities(s, 0.07), std::log(static_cast<double>(b)), 1e-12) << b;
  }
}

TEST(Itc, SeparatedDiagonalIsNearZero) {
  const auto s = square(2, {10, -10, -10, 10});
  EXPECT_LT(itc_from_similarities(s, 0.05), 1e-6);
}

TEST(Itc, MatchesScalarOracle) {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const std::size_t b = 2 + rng.below(6);
    Matrix s(b, b);
    for (auto& v : s.data) v = rng.unit() * 2 - 1;
    EXPECT_NEAR(itc_from_similarities(s, 0.5), oracle_itc(s, 0.5), 1e-10);
  }
}

TEST(Itc, PoolingMaxAndMeanDiffer) {
  const auto batch = heterogeneous_batch();
  const auto smax = similarity_matrix(batch, Pooling::max);
  const auto smean = similarity_matrix(batch, Pooling::mean);
  EXPECT_DOUBLE_EQ(smax(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(smean(0, 0), 0.5);
  EXPECT_NE(itc_loss(batch, 0.1, Pooling::max), itc_loss(batch, 0.1, Pooling::mean));
}

TEST(Itc, RejectsBadInput) {
  EXPECT_THROW(EmbeddingBatch(2, 1, 2, {1, 1, 0, 1}, {1, 0, 0, 1}), InvalidArgument);
  EXPECT_THROW(itc_loss(EmbeddingBatch(1, 1, 2, {1, 0}, {1, 0}), 0.1), InvalidArgument);
  EXPECT_THROW(itc_from_similarities(Matrix(2, 2), 0.0), InvalidArgument);
}

TEST(Itc, RotationInvariant) {
  Rng rng(23);
  const auto batch = random_embedding_batch(rng, 4, 3, 5);
  const auto rot = random_rotation(rng, 5);
  auto rotate = [&](const std::vector<double>& flat) {
    std::vector<double> out(flat.size());
    for (std::size_t row = 0; row < flat.size() / 5; ++row) {
      for (std::size_t i = 0; i < 5; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < 5; ++j) acc += rot(i, j) * flat[row * 5 + j];
        out[row * 5 + i] = acc;
      }
    }
    return out;
  };
  const EmbeddingBatch rotated(4, 3, 5, rotate(batch.query_data()), rotate(batch.text_data()));
  EXPECT_NEAR(itc_loss(batch, 0.07), itc_loss(rotated, 0.07), 1e-9);
}

TEST(Itc, PermutationEquivariant) {
  Rng rng(29);
  const auto batch = random_embedding_batch(rng, 3, 2, 4);
  const std::size_t perm[] = {2, 0, 1};
  std::vector<double> q, t;
  for (std::size_t p : perm) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto v = batch.query(p, k);
      q.insert(q.end(), v.begin(), v.end());
    }
    const auto v = batch.text(p);
    t.insert(t.end(), v.begin(), v.end());
  }
  EXPECT_NEAR(itc_loss(batch, 0.1), itc_loss(EmbeddingBatch(3, 2, 4, q, t), 0.1), 1e-12);
}

TEST(Itc, GradientMatchesFiniteDifference) {
  Rng rng(31);
  for (std::size_t b : {2u, 3u, 8u}) {
    Matrix s(b, b);
    for (auto& v : s.data) v = rng.unit() * 2 - 1;
    const auto analytic = itc_similarity_gradient(s, 0.3);
    const auto fd = central_fd([&](const std::vector<double>& x) { return oracle_itc(square(b, x), 0.3); }, s.data,
                               1e-5);
    for (std::size_t k = 0; k < fd.size(); ++k) EXPECT_NEAR(analytic.data[k], fd[k], 1e-7) << b << "/" << k;
  }
}

TEST(Itg, HandArithmetic) {
  EXPECT_NEAR(nll_of_realized(std::vector<double>{0.5, 0.25}), 2.0794415416798357, 1e-12);
  EXPECT_NEAR(itg_nll(uniform_logits(10, 3)), 3 * std::log(10.0), 1e-12);
  EXPECT_EQ(itg_nll(TokenLogits{{{0.0, 1.0}, {1.0}}, {1, 0}}), 0.0);
}

TEST(Itg, ClampsZeroProbability) {
  EXPECT_NEAR(nll_of_realized(std::vector<double>{0.0}), -std::log(kProbFloor), 1e-9);
}

TEST(Itg, RejectsInvalidLogits) {
  EXPECT_THROW(itg_nll(TokenLogits{}), InvalidArgument);
  EXPECT_THROW(itg_nll(TokenLogits{{{0.5, 0.4}}, {0}}), InvalidArgument);
  EXPECT_THROW(itg_nll(TokenLogits{{{0.5, 0.5}}, {2}}), InvalidArgument);
  EXPECT_THROW(itg_nll(TokenLogits{{{0.5, 0.5}}, {0, 1}}), InvalidArgument);
}

TEST(Likelihood, ProductOfRealized) {
  EXPECT_NEAR(eq1_likelihood(uniform_logits(10, 3)), 1e-3, 1e-15);
  EXPECT_NEAR(eq1_likelihood(TokenLogits{{{0.3, 0.7}}, {1}}), 0.7, 1e-15);
}

TEST(Likelihood, ExpNegNllIdentity) {
  Rng rng(37);
  for (int i = 0; i < 200; ++i) {
    const auto logits = random_token_logits(rng, 1 + rng.below(12), 2 + rng.below(30));
    const double lik = eq1_likelihood(logits);
    EXPECT_NEAR(std::exp(-itg_nll(logits)) / lik, 1.0, 1e-9);
    EXPECT_GE(itg_nll(logits), 0.0);
  }
}

TEST(Itm, HandArithmetic) {
  EXPECT_NEAR(itm_loss({{0.9, 0.2}, {1, 0}}), -(std::log(0.9) + std::log(0.8)) / 2, 1e-12);
  EXPECT_NEAR(itm_loss({{0.9, 0.2}, {1, 0}}), 0.16425, 5e-6);
  EXPECT_NEAR(itm_loss({{0.5, 0.5, 0.5}, {1, 0, 1}}), std::log(2.0), 1e-12);
  EXPECT_LT(itm_loss({{1 - 1e-12}, {1}}), 1e-11);
}

TEST(Itm, RejectsMismatch) {
  EXPECT_THROW(itm_loss({{0.5}, {1, 0}}), InvalidArgument);
  EXPECT_THROW(itm_loss({{0.5}, {2}}), InvalidArgument);
}

TEST(Itm, GradientMatchesFiniteDifference) {
  const MatchBatch b{{0.9, 0.2, 0.6, 0.35}, {1, 0, 0, 1}};
  const auto analytic = itm_gradient(b);
  const auto fd = central_fd([&](const std::vector<double>& p) { return itm_loss({p, b.labels}); }, b.match_probs,
                             1e-6);
  for (std::size_t k = 0; k < fd.size(); ++k) EXPECT_NEAR(analytic[k], fd[k], 1e-6 * std::abs(fd[k]) + 1e-9);
}

TEST(GradCheck, ConstantFunction) {
  const std::vector<double> x{1.0, -2.0, 3.0}, zero(3, 0.0);
  const auto r = grad_check([](std::span<const double>) { return 4.0; }, x, zero);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.max_rel_error, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  const std::vector<double> x{1.0, 2.0}, wrong{2.0, 5.0};
  const auto r = grad_check([](std::span<const double> v) { return v[0] * v[0] + v[1] * v[1]; }, x, wrong);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(GradCheck, NonFiniteNamesCoordinate) {
  const std::vector<double> x{1.0, 1e-5}, g{0.0, 1e5};
  const auto r = grad_check([](std::span<const double> v) { return std::log(v[1]); }, x, g);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_index, 1u);
  EXPECT_NE(r.diagnostic.find("coordinate 1"), std::string::npos);
}

TEST(KernelCheck, AllChecksPass) {
  KernelCheckOptions opts;
  opts.random_cases = 100;
  const auto report = run_kernel_checks(opts);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(report.all_passed());
  EXPECT_EQ(report.to_json()["checks"].size(), report.checks.size());
}

}  // namespace
}  // namespace clover::loss
