// SPDX-License-Identifier: Apache-2.0
#include "clover/backend.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::gen {

MockBackend::MockBackend(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ConfigError(fmt::format("mock fixture directory does not exist: {}", dir_.string()));
  }
}

std::filesystem::path MockBackend::fixture_path(const PromptEnvelope& envelope) const {
  return dir_ / (envelope.digest() + ".txt");
}

BackendReply MockBackend::send(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) {
  const auto path = fixture_path(envelope);
  if (!std::filesystem::exists(path)) {
    throw BackendError(fmt::format("no mock fixture {}", path.filename().string()), 404, false);
  }
  BackendReply reply{read_file(path), std::nullopt, std::nullopt};
  if (estimate_tokens(reply.text) > max_completion_tokens) {
    throw BackendError(fmt::format("mock fixture {} exceeds {} completion tokens", path.filename().string(),
                                   max_completion_tokens),
                       413, false);
  }
  return reply;
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  if (retry < 1) return std::chrono::milliseconds{0};
  const double raw = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry - 1);
  const double capped = std::min(raw, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds{static_cast<std::int64_t>(capped)};
}

Rates Rates::from_usd_per_1k(double in, double out) {
  if (in < 0 || out < 0) throw ConfigError("token rates must be non-negative");
  return Rates{std::llround(in * 1e6), std::llround(out * 1e6)};
}

std::int64_t cost_nanousd(std::int64_t prompt_tokens, std::int64_t completion_tokens, const Rates& rates) {
  return prompt_tokens * rates.in_micro_per_1k + completion_tokens * rates.out_micro_per_1k;
}

std::int64_t usd_to_nano(double usd) { return std::llround(usd * 1e9); }
double nano_to_usd(std::int64_t nano) { return static_cast<double>(nano) / 1e9; }

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t estimate_prompt_tokens(const PromptEnvelope& envelope) {
  std::int64_t total = 0;
  for (const auto& m : envelope.messages()) total += estimate_tokens(m.content);
  return total;
}

std::int64_t prompt_token_ceiling(const PromptEnvelope& envelope) {
  std::int64_t total = 3;
  for (const auto& m : envelope.messages()) total += static_cast<std::int64_t>(m.content.size()) + 4;
  return total;
}

std::int64_t projected_cost_nanousd(const PromptEnvelope& envelope, std::int64_t max_completion_tokens,
                                    const Rates& rates) {
  return cost_nanousd(prompt_token_ceiling(envelope), max_completion_tokens, rates);
}

json to_json(const GenerationReceipt& r) {
  return json{{"image_id", r.image_id},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens},
              {"cost_nanousd", r.cost_nanousd},
              {"estimated_cost_usd", r.estimated_cost_usd()},
              {"backend_id", r.backend_id},
              {"retries", r.retries},
              {"usage_reported", r.usage_reported}};
}

GenerationReceipt receipt_from_json(const json& j) {
  GenerationReceipt r;
  r.image_id = j.at("image_id").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
  r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
  r.cost_nanousd = j.at("cost_nanousd").get<std::int64_t>();
  r.backend_id = j.value("backend_id", "");
  r.retries = j.value("retries", 0);
  r.usage_reported = j.value("usage_reported", false);
  return r;
}

CostMeter::CostMeter(std::int64_t budget_nanousd, std::int64_t already_spent)
    : budget_(budget_nanousd), spent_(already_spent) {
  if (budget_nanousd < 0) throw InvalidArgument("budget must be non-negative");
}

bool CostMeter::try_reserve(std::int64_t projected) {
  std::lock_guard lock(mu_);
  if (spent_ + reserved_ + projected > budget_) return false;
  reserved_ += projected;
  return true;
}

void CostMeter::settle(std::int64_t projected, std::int64_t actual) {
  std::lock_guard lock(mu_);
  reserved_ -= projected;
  spent_ += actual;
}

void CostMeter::release(std::int64_t projected) {
  std::lock_guard lock(mu_);
  reserved_ -= projected;
}

std::int64_t CostMeter::spent() const {
  std::lock_guard lock(mu_);
  return spent_;
}

std::int64_t CostMeter::reserved() const {
  std::lock_guard lock(mu_);
  return reserved_;
}

Completion complete(const PromptEnvelope& envelope, CompletionBackend& backend, const RetryPolicy& policy,
                    const Rates& rates, std::int64_t max_completion_tokens, CostMeter* meter,
                    std::string image_id) {
  const std::int64_t projected = projected_cost_nanousd(envelope, max_completion_tokens, rates);
  if (meter && !meter->try_reserve(projected)) {
    throw BudgetExceeded(fmt::format("projected cost {:.9f} USD would exceed budget {:.9f} USD (spent {:.9f})",
                                     nano_to_usd(projected), nano_to_usd(meter->budget()),
                                     nano_to_usd(meter->spent())));
  }

  int retries = 0;
  for (;;) {
    try {
      BackendReply reply = backend.send(envelope, max_completion_tokens);
      GenerationReceipt receipt;
      receipt.image_id = std::move(image_id);
      receipt.usage_reported = reply.prompt_tokens.has_value() && reply.completion_tokens.has_value();
      receipt.prompt_tokens = reply.prompt_tokens.value_or(estimate_prompt_tokens(envelope));
      receipt.completion_tokens = reply.completion_tokens.value_or(estimate_tokens(reply.text));
      receipt.cost_nanousd = cost_nanousd(receipt.prompt_tokens, receipt.completion_tokens, rates);
      receipt.backend_id = backend.id();
      receipt.retries = retries;
      if (meter) meter->settle(projected, receipt.cost_nanousd);
      return Completion{std::move(reply.text), std::move(receipt)};
    } catch (const BackendError& e) {
      if (!e.transient() || retries >= policy.max_retries) {
        if (meter) meter->release(projected);
        if (!e.transient()) throw;
        throw BackendError(fmt::format("giving up after {} retries: {}", retries, e.what()), e.status(), true);
      }
      ++retries;
      const auto wait = policy.delay(retries);
      if (policy.sleep) {
        policy.sleep(wait);
      } else {
        std::this_thread::sleep_for(wait);
      }
    } catch (...) {
      if (meter) meter->release(projected);
      throw;
    }
  }
}

}  // namespace clover::gen
