// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clover/loss_kernel.hpp"

namespace clover::loss {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;      // worst error or the checked quantity
  double threshold = 0;  // pass bound for `value`
  std::string detail;
};

struct KernelCheckReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  json to_json() const;
};

struct KernelCheckOptions {
  std::uint64_t seed = 0;
  std::size_t random_cases = 1000;
  /// Extra batch to evaluate (itc for both poolings is reported).
  std::optional<EmbeddingBatch> fixture;
  double temperature = 0.07;
};

/// Random unit-normalized batch drawn from `rng`.
EmbeddingBatch random_embedding_batch(Rng& rng, std::size_t batch, std::size_t queries, std::size_t dim);

/// Random probability vectors (Dirichlet(1)-like via normalized exponentials)
/// and realized ids.
TokenLogits random_token_logits(Rng& rng, std::size_t length, std::size_t vocab);

/// Haar-ish random orthogonal matrix by Gram-Schmidt on Gaussian columns.
Matrix random_rotation(Rng& rng, std::size_t dim);

/// Invariant, identity and finite-difference gradient checks for every loss.
KernelCheckReport run_kernel_checks(const KernelCheckOptions& options = {});

}  // namespace clover::loss
