// SPDX-License-Identifier: Apache-2.0
#include "clover/kernel_check.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "clover/grad_check.hpp"

namespace clover::loss {

namespace {

double gaussian(Rng& rng) {
  // Box-Muller on the pinned engine; std::normal_distribution is not portable.
  double u1;
  do {
    u1 = rng.unit();
  } while (u1 <= 0.0);
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void normalize_rows(std::vector<double>& data, std::size_t dim) {
  for (std::size_t r = 0; r * dim < data.size(); ++r) {
    double n = 0;
    for (std::size_t k = 0; k < dim; ++k) n += data[r * dim + k] * data[r * dim + k];
    n = std::sqrt(n);
    for (std::size_t k = 0; k < dim; ++k) data[r * dim + k] /= n;
  }
}

std::vector<double> rotate_rows(const std::vector<double>& data, std::size_t dim, const Matrix& rot) {
  std::vector<double> out(data.size(), 0.0);
  for (std::size_t r = 0; r * dim < data.size(); ++r) {
    for (std::size_t i = 0; i < dim; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < dim; ++k) s += rot(i, k) * data[r * dim + k];
      out[r * dim + i] = s;
    }
  }
  return out;
}

CheckResult bound_check(std::string name, double value, double threshold, std::string detail = {}) {
  return CheckResult{std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

}  // namespace

bool KernelCheckReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

json KernelCheckReport::to_json() const {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold},
                   {"detail", c.detail}});
  }
  return json{{"passed", all_passed()}, {"checks", std::move(arr)}};
}

EmbeddingBatch random_embedding_batch(Rng& rng, std::size_t batch, std::size_t queries, std::size_t dim) {
  std::vector<double> q(batch * queries * dim), t(batch * dim);
  for (auto& v : q) v = gaussian(rng);
  for (auto& v : t) v = gaussian(rng);
  normalize_rows(q, dim);
  normalize_rows(t, dim);
  return EmbeddingBatch(batch, queries, dim, std::move(q), std::move(t));
}

TokenLogits random_token_logits(Rng& rng, std::size_t length, std::size_t vocab) {
  TokenLogits logits;
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<double> p(vocab);
    double sum = 0;
    for (auto& v : p) {
      v = -std::log(1.0 - rng.unit());
      sum += v;
    }
    for (auto& v : p) v /= sum;
    logits.stepwise_probs.push_back(std::move(p));
    logits.answer_ids.push_back(static_cast<std::size_t>(rng.below(vocab)));
  }
  return logits;
}

Matrix random_rotation(Rng& rng, std::size_t dim) {
  Matrix m(dim, dim);
  for (auto& v : m.data) v = gaussian(rng);
  // Modified Gram-Schmidt over columns.
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double d = 0;
      for (std::size_t r = 0; r < dim; ++r) d += m(r, c) * m(r, p);
      for (std::size_t r = 0; r < dim; ++r) m(r, c) -= d * m(r, p);
    }
    double n = 0;
    for (std::size_t r = 0; r < dim; ++r) n += m(r, c) * m(r, c);
    n = std::sqrt(n);
    for (std::size_t r = 0; r < dim; ++r) m(r, c) /= n;
  }
  return m;
}

KernelCheckReport run_kernel_checks(const KernelCheckOptions& options) {
  KernelCheckReport report;
  Rng rng(options.seed);
  const double tau = options.temperature;

  {
    double worst = 0;
    for (std::size_t c = 0; c < options.random_cases; ++c) {
      const auto logits = random_token_logits(rng, 1 + rng.below(20), 2 + rng.below(49));
      const double lik = eq1_likelihood(logits);
      worst = std::max(worst, std::abs(std::exp(-itg_nll(logits)) - lik) / lik);
    }
    report.checks.push_back(bound_check("nll_likelihood_identity", worst, 1e-9,
                                        fmt::format("{} random sequences, max relative gap", options.random_cases)));
  }

  for (const std::size_t b : {2u, 3u, 8u}) {
    const std::size_t nq = 2, dim = 4;
    std::vector<double> q(b * nq * dim, 0.0), t(b * dim, 0.0);
    for (std::size_t r = 0; r < b * nq; ++r) q[r * dim] = 1.0;
    for (std::size_t r = 0; r < b; ++r) t[r * dim] = 1.0;
    const EmbeddingBatch batch(b, nq, dim, std::move(q), std::move(t));
    const double loss = itc_loss(batch, tau);
    report.checks.push_back(bound_check(fmt::format("itc_equal_similarity_B{}", b),
                                        std::abs(loss - std::log(static_cast<double>(b))), 1e-9,
                                        fmt::format("loss {:.15f} vs ln {}", loss, b)));
  }

  {
    // Moderate temperature keeps every softmax entry well above the
    // finite-difference noise floor.
    const double grad_tau = 0.5;
    double worst = 0;
    std::string diag;
    for (int c = 0; c < 20; ++c) {
      const std::size_t b = 3;
      Matrix sim(b, b);
      for (auto& v : sim.data) v = 2.0 * rng.unit() - 1.0;
      const auto grad = itc_similarity_gradient(sim, grad_tau);
      auto f = [&](std::span<const double> x) {
        Matrix s(b, b);
        s.data.assign(x.begin(), x.end());
        return itc_from_similarities(s, grad_tau);
      };
      const auto r = grad_check(f, sim.data, grad.data);
      if (!r.diagnostic.empty()) diag = r.diagnostic;
      worst = std::max(worst, r.max_rel_error);
    }
    report.checks.push_back(bound_check("itc_gradient_fd", worst, 1e-5, diag.empty() ? "20 random B=3 cases" : diag));
  }

  {
    double worst = 0;
    for (int c = 0; c < 20; ++c) {
      MatchBatch mb;
      for (int k = 0; k < 8; ++k) {
        mb.match_probs.push_back(0.1 + 0.8 * rng.unit());
        mb.labels.push_back(static_cast<int>(rng.below(2)));
      }
      auto f = [&](std::span<const double> p) {
        MatchBatch m{{p.begin(), p.end()}, mb.labels};
        return itm_loss(m);
      };
      worst = std::max(worst, grad_check(f, mb.match_probs, itm_gradient(mb)).max_rel_error);
    }
    report.checks.push_back(bound_check("itm_gradient_fd", worst, 1e-5, "20 random n=8 cases"));
  }

  {
    double worst = 0;
    for (int c = 0; c < 20; ++c) {
      std::vector<double> p(1 + rng.below(12));
      for (auto& v : p) v = 0.1 + 0.9 * rng.unit();
      worst = std::max(worst, grad_check(nll_of_realized, p, nll_realized_gradient(p)).max_rel_error);
    }
    report.checks.push_back(bound_check("itg_gradient_fd", worst, 1e-5, "20 random sequences"));
  }

  {
    const std::vector<double> x{0.3, -1.2, 4.0};
    const std::vector<double> zero(3, 0.0);
    const auto r = grad_check([](std::span<const double>) { return 2.5; }, x, zero);
    double max_numeric = 0;
    for (double v : r.numeric) max_numeric = std::max(max_numeric, std::abs(v));
    report.checks.push_back(bound_check("constant_function_zero_gradient", max_numeric, 0.0));
  }

  {
    double worst = 0;
    for (int c = 0; c < 10; ++c) {
      const auto batch = random_embedding_batch(rng, 4, 3, 6);
      const auto rot = random_rotation(rng, 6);
      const EmbeddingBatch rotated(4, 3, 6, rotate_rows(batch.query_data(), 6, rot),
                                   rotate_rows(batch.text_data(), 6, rot));
      for (auto pool : {Pooling::max, Pooling::mean}) {
        worst = std::max(worst, std::abs(itc_loss(batch, tau, pool) - itc_loss(rotated, tau, pool)));
      }
    }
    report.checks.push_back(bound_check("itc_rotation_invariance", worst, 1e-9));
  }

  {
    double worst = 0;
    for (int c = 0; c < 10; ++c) {
      const std::size_t b = 5, nq = 2, dim = 4;
      const auto batch = random_embedding_batch(rng, b, nq, dim);
      std::vector<std::size_t> perm = sample_indices(b, b, rng);
      std::vector<double> q, t;
      for (auto i : perm) {
        for (std::size_t qq = 0; qq < nq; ++qq) {
          auto row = batch.query(i, qq);
          q.insert(q.end(), row.begin(), row.end());
        }
        auto row = batch.text(i);
        t.insert(t.end(), row.begin(), row.end());
      }
      const EmbeddingBatch permuted(b, nq, dim, std::move(q), std::move(t));
      worst = std::max(worst, std::abs(itc_loss(batch, tau) - itc_loss(permuted, tau)));

      MatchBatch mb, mp;
      for (std::size_t k = 0; k < b; ++k) {
        mb.match_probs.push_back(rng.unit() * 0.98 + 0.01);
        mb.labels.push_back(static_cast<int>(rng.below(2)));
      }
      for (auto i : perm) {
        mp.match_probs.push_back(mb.match_probs[i]);
        mp.labels.push_back(mb.labels[i]);
      }
      worst = std::max(worst, std::abs(itm_loss(mb) - itm_loss(mp)));
    }
    report.checks.push_back(bound_check("batch_permutation_equivariance", worst, 1e-12));
  }

  {
    double most_negative = 0;
    for (int c = 0; c < 200; ++c) {
      const auto batch = random_embedding_batch(rng, 2 + rng.below(6), 1 + rng.below(4), 3 + rng.below(5));
      most_negative = std::min(most_negative, itc_loss(batch, tau));
      most_negative = std::min(most_negative, itg_nll(random_token_logits(rng, 1 + rng.below(8), 5)));
    }
    report.checks.push_back(bound_check("losses_nonnegative", 0.0 - most_negative, 0.0));
  }

  {
    TokenLogits certain{{{0.0, 1.0, 0.0}, {1.0, 0.0}}, {1, 0}};
    report.checks.push_back(bound_check("itg_zero_when_certain", std::abs(itg_nll(certain)), 0.0));
  }

  if (options.fixture) {
    const double lmax = itc_loss(*options.fixture, tau, Pooling::max);
    const double lmean = itc_loss(*options.fixture, tau, Pooling::mean);
    const bool ok = std::isfinite(lmax) && std::isfinite(lmean) && lmax >= 0 && lmean >= 0;
    report.checks.push_back(CheckResult{"fixture_itc", ok, lmax, 0.0,
                                        fmt::format("itc max-pool {:.12f}, mean-pool {:.12f}", lmax, lmean)});
  }
  return report;
}

}  // namespace clover::loss
