// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "clover/prompt.hpp"

namespace clover::gen {

/// What a backend returns for one request. Token counts are present only when
/// the service reports usage.
struct BackendReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

/// Chat-completion contract: messages in, text (plus optional usage) out.
/// Failures are reported as BackendError; transient ones are retried by complete().
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual BackendReply send(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) = 0;
  virtual std::string id() const = 0;
  virtual bool is_live() const = 0;
};

/// Serves `<fixture_dir>/<envelope digest>.txt` verbatim. Never touches the network.
class MockBackend final : public CompletionBackend {
 public:
  explicit MockBackend(std::filesystem::path fixture_dir);
  BackendReply send(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) override;
  std::string id() const override { return "mock:" + dir_.string(); }
  bool is_live() const override { return false; }

  std::filesystem::path fixture_path(const PromptEnvelope& envelope) const;

 private:
  std::filesystem::path dir_;
};

struct HttpBackendConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string dialect = "openai-chat";
  std::string model;
  std::string api_key;
  double temperature = 0.7;
  std::chrono::seconds timeout{60};
};

/// Live HTTP chat-completion client. The constructor validates the endpoint,
/// dialect and credential, so misconfiguration fails before any request.
class HttpBackend final : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;
  BackendReply send(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) override;
  std::string id() const override { return "http:" + config_.model + "@" + config_.endpoint; }
  bool is_live() const override { return true; }

  /// Request body for `envelope` in the configured dialect.
  json request_body(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) const;

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

/// Exponential backoff: delay(n) = min(base * multiplier^(n-1), max_delay)
/// before retry n (1-based).
struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60000};
  /// Injected so tests need not wait; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds delay(int retry) const;
};

/// Prices in integer micro-USD per 1,000 tokens, so a single token costs
/// exactly `rate` nano-USD and cost sums are exact.
struct Rates {
  std::int64_t in_micro_per_1k = 0;
  std::int64_t out_micro_per_1k = 0;

  /// Rounds to the nearest micro-USD per 1k tokens.
  static Rates from_usd_per_1k(double in, double out);
};

std::int64_t cost_nanousd(std::int64_t prompt_tokens, std::int64_t completion_tokens, const Rates& rates);
std::int64_t usd_to_nano(double usd);
double nano_to_usd(std::int64_t nano);

/// ceil(bytes / 4)
std::int64_t estimate_tokens(std::string_view text);
/// Sum of estimate_tokens over message contents.
std::int64_t estimate_prompt_tokens(const PromptEnvelope& envelope);
/// Upper bound used for budget projection: one token per byte plus 4 tokens
/// of per-message framing and 3 for the reply primer.
std::int64_t prompt_token_ceiling(const PromptEnvelope& envelope);
/// Worst-case cost of one request: ceiling prompt tokens plus the full
/// completion allowance.
std::int64_t projected_cost_nanousd(const PromptEnvelope& envelope, std::int64_t max_completion_tokens,
                                    const Rates& rates);

struct GenerationReceipt {
  std::string image_id;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t cost_nanousd = 0;
  std::string backend_id;
  int retries = 0;
  bool usage_reported = false;

  double estimated_cost_usd() const { return nano_to_usd(cost_nanousd); }
  bool operator==(const GenerationReceipt&) const = default;
};

json to_json(const GenerationReceipt& r);
GenerationReceipt receipt_from_json(const json& j);

/// Thread-safe spend tracker. Reservations hold projected cost for requests
/// in flight; settle() swaps a reservation for the actual receipt cost.
class CostMeter {
 public:
  explicit CostMeter(std::int64_t budget_nanousd, std::int64_t already_spent = 0);

  bool try_reserve(std::int64_t projected);
  void settle(std::int64_t projected, std::int64_t actual);
  void release(std::int64_t projected);

  std::int64_t budget() const { return budget_; }
  std::int64_t spent() const;
  std::int64_t reserved() const;

 private:
  mutable std::mutex mu_;
  std::int64_t budget_;
  std::int64_t spent_;
  std::int64_t reserved_ = 0;
};

struct Completion {
  std::string text;
  GenerationReceipt receipt;
};

/// Sends `envelope`, retrying transient failures per `policy`. When `meter`
/// is given, the projected cost is reserved first and BudgetExceeded is
/// thrown without sending if it does not fit.
Completion complete(const PromptEnvelope& envelope, CompletionBackend& backend, const RetryPolicy& policy,
                    const Rates& rates, std::int64_t max_completion_tokens, CostMeter* meter = nullptr,
                    std::string image_id = {});

}  // namespace clover::gen
