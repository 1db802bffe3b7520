// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clover/backend.hpp"
#include "clover/corpus.hpp"
#include "clover/error.hpp"
#include "clover/instruction.hpp"
#include "clover/qa_text.hpp"

namespace clover::gen {

struct GenerationOptions {
  std::vector<FewShotExample> fewshot;
  std::string system_text{kPathologySystemPrompt};
  Rates rates;
  std::int64_t budget_nanousd = 0;
  std::int64_t max_completion_tokens = 512;
  std::size_t max_concurrency = 4;
  RetryPolicy retry;
  bool strict = false;
  std::string model;  // recorded in provenance
  std::string created_at;
  /// JSONL checkpoint; existing entries are resumed, new ones appended.
  std::optional<std::filesystem::path> checkpoint;
};

struct SkipEntry {
  std::string image_id;
  std::string reason;
};

struct GenerationResult {
  std::vector<Instruction> instructions;    // corpus order
  std::vector<GenerationReceipt> receipts;  // every billed request, corpus order
  std::vector<SkipEntry> skipped;
  std::vector<std::string> warnings;
  bool halted_by_budget = false;
  std::size_t resumed = 0;      // records restored from the checkpoint
  std::size_t unprocessed = 0;  // records left for a later resume

  std::int64_t total_cost_nanousd() const;
};

/// Raised when generation stops midway (checkpoint IO failure, rejected
/// credentials). `partial` holds everything completed so far.
class GenerationAborted : public Error {
 public:
  GenerationAborted(const std::string& what, GenerationResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const GenerationResult& partial() const noexcept { return partial_; }

 private:
  GenerationResult partial_;
};

/// Drives the backend over every corpus record and turns parsed QA pairs into
/// generation instructions.
///
/// Records are dispatched in windows of `max_concurrency`. Before a window is
/// sent, each request's worst-case cost is reserved against the budget in
/// corpus order; the first request that does not fit halts the run, so the
/// receipts never sum past the budget. Results are settled in corpus order,
/// which keeps output independent of thread timing.
GenerationResult generate_instructions(const corpus::Corpus& corpus, CompletionBackend& backend,
                                       const GenerationOptions& options);

json to_json(const SkipEntry& s);

}  // namespace clover::gen
