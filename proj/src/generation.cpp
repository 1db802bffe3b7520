// SPDX-License-Identifier: Apache-2.0
#include "clover/generation.hpp"

#include <fstream>
#include <future>
#include <unordered_map>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::gen {

namespace {

struct Slot {
  std::optional<Instruction> instruction;
  std::optional<GenerationReceipt> receipt;
  std::optional<SkipEntry> skip;
};

struct Job {
  std::size_t index;
  PromptEnvelope envelope;
  std::int64_t projected;
};

struct Outcome {
  std::optional<Completion> completion;
  std::exception_ptr error;
};

std::string caption_of(const corpus::ImageTextRecord& rec) {
  return rec.merged_caption.empty() ? corpus::merge_captions(rec.captions) : rec.merged_caption;
}

std::unordered_map<std::string, Slot> load_checkpoint(const std::filesystem::path& path) {
  std::unordered_map<std::string, Slot> prior;
  if (!std::filesystem::exists(path)) return prior;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      Slot slot;
      const auto id = j.at("image_id").get<std::string>();
      if (j.contains("receipt")) slot.receipt = receipt_from_json(j.at("receipt"));
      if (j.at("status").get<std::string>() == "ok") {
        slot.instruction = instruction_from_json(j.at("instruction"), line);
      } else {
        slot.skip = SkipEntry{id, j.value("reason", "")};
      }
      prior[id] = std::move(slot);
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}: bad checkpoint entry: {}", path.string(), e.what()), line);
    }
  });
  return prior;
}

json checkpoint_entry(const std::string& image_id, const Slot& slot) {
  json j{{"image_id", image_id}, {"status", slot.instruction ? "ok" : "skipped"}};
  if (slot.skip) j["reason"] = slot.skip->reason;
  if (slot.receipt) j["receipt"] = to_json(*slot.receipt);
  if (slot.instruction) j["instruction"] = to_json(*slot.instruction);
  return j;
}

}  // namespace

std::int64_t GenerationResult::total_cost_nanousd() const {
  std::int64_t total = 0;
  for (const auto& r : receipts) total += r.cost_nanousd;
  return total;
}

json to_json(const SkipEntry& s) { return json{{"image_id", s.image_id}, {"reason", s.reason}}; }

GenerationResult generate_instructions(const corpus::Corpus& corpus, CompletionBackend& backend,
                                       const GenerationOptions& options) {
  if (options.budget_nanousd <= 0) throw InvalidArgument("budget_usd must be positive");
  if (options.max_concurrency < 1) throw InvalidArgument("max_concurrency must be >= 1");
  if (options.max_completion_tokens < 1) throw InvalidArgument("max_completion_tokens must be >= 1");

  const auto& records = corpus.records;
  std::vector<Slot> slots(records.size());
  GenerationResult result;

  std::unordered_map<std::string, Slot> prior;
  std::ofstream ckpt;
  if (options.checkpoint) {
    prior = load_checkpoint(*options.checkpoint);
    if (options.checkpoint->has_parent_path()) std::filesystem::create_directories(options.checkpoint->parent_path());
    ckpt.open(*options.checkpoint, std::ios::app | std::ios::binary);
    if (!ckpt) throw Error("cannot open checkpoint for writing: " + options.checkpoint->string());
  }

  std::int64_t prior_spent = 0;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto it = prior.find(records[i].image_id); it != prior.end()) {
      if (it->second.receipt) prior_spent += it->second.receipt->cost_nanousd;
      slots[i] = std::move(it->second);
      ++result.resumed;
    } else {
      pending.push_back(i);
    }
  }
  CostMeter meter(options.budget_nanousd, prior_spent);

  auto collect = [&] {
    GenerationResult out;
    out.warnings = result.warnings;
    out.halted_by_budget = result.halted_by_budget;
    out.resumed = result.resumed;
    out.unprocessed = result.unprocessed;
    for (const auto& s : slots) {
      if (s.receipt) out.receipts.push_back(*s.receipt);
      if (s.instruction) out.instructions.push_back(*s.instruction);
      if (s.skip) out.skipped.push_back(*s.skip);
    }
    return out;
  };

  auto finish_slot = [&](std::size_t index) {
    if (!ckpt.is_open()) return;
    ckpt << checkpoint_entry(records[index].image_id, slots[index]).dump() << '\n';
    ckpt.flush();
    if (!ckpt) {
      throw GenerationAborted("checkpoint write failed: " + options.checkpoint->string(), collect());
    }
  };

  std::size_t pos = 0;
  while (pos < pending.size() && !result.halted_by_budget) {
    std::vector<Job> window;
    while (window.size() < options.max_concurrency && pos < pending.size()) {
      const std::size_t idx = pending[pos];
      auto envelope = build_prompt(caption_of(records[idx]), options.fewshot, options.system_text);
      const auto projected = projected_cost_nanousd(envelope, options.max_completion_tokens, options.rates);
      if (!meter.try_reserve(projected)) {
        result.halted_by_budget = true;
        break;
      }
      window.push_back(Job{idx, std::move(envelope), projected});
      ++pos;
    }

    std::vector<std::future<Outcome>> futures;
    futures.reserve(window.size());
    for (const auto& job : window) {
      futures.push_back(std::async(std::launch::async, [&backend, &options, &job, &records] {
        Outcome o;
        try {
          o.completion = complete(job.envelope, backend, options.retry, options.rates, options.max_completion_tokens,
                                  nullptr, records[job.index].image_id);
        } catch (...) {
          o.error = std::current_exception();
        }
        return o;
      }));
    }

    for (std::size_t w = 0; w < window.size(); ++w) {
      const auto& job = window[w];
      const auto& image_id = records[job.index].image_id;
      Outcome outcome = futures[w].get();
      Slot& slot = slots[job.index];

      if (!outcome.completion) {
        meter.release(job.projected);
        try {
          std::rethrow_exception(outcome.error);
        } catch (const BackendError& e) {
          if (e.status() == 401 || e.status() == 403) {
            for (std::size_t rest = w + 1; rest < window.size(); ++rest) {
              auto o = futures[rest].get();
              if (o.completion) meter.settle(window[rest].projected, o.completion->receipt.cost_nanousd);
            }
            throw GenerationAborted(fmt::format("backend rejected credentials: {}", e.what()), collect());
          }
          if (e.transient()) {
            // Not checkpointed: a resumed run retries it.
            result.warnings.push_back(fmt::format("{}: {}", image_id, e.what()));
            result.skipped.push_back(SkipEntry{image_id, fmt::format("backend: {}", e.what())});
            continue;
          }
          slot.skip = SkipEntry{image_id, fmt::format("backend: {}", e.what())};
        } catch (const std::exception& e) {
          slot.skip = SkipEntry{image_id, fmt::format("error: {}", e.what())};
        }
        finish_slot(job.index);
        continue;
      }

      auto& completion = *outcome.completion;
      meter.settle(job.projected, completion.receipt.cost_nanousd);
      slot.receipt = completion.receipt;

      try {
        auto parsed = parse_qa(completion.text, options.strict);
        for (const auto& w_msg : parsed.warnings) result.warnings.push_back(fmt::format("{}: {}", image_id, w_msg));
        const auto lint = lint_qa(parsed.pairs);
        if (!lint.clean()) {
          const auto& v = lint.violations.front();
          auto reason = fmt::format("lint: {} '{}' in pair {} {}", v.rule_id, v.excerpt, v.pair_index + 1, v.field);
          if (options.strict) throw ParseError(reason);
          result.warnings.push_back(fmt::format("{}: {}", image_id, reason));
        }
        std::vector<Turn> turns;
        for (auto& p : parsed.pairs) turns.push_back(Turn{std::move(p.question), std::move(p.answer)});
        slot.instruction = make_instruction(
            image_id, InstructionKind::generation_based, std::move(turns),
            Provenance{"generation", options.model.empty() ? std::nullopt : std::optional(options.model),
                       job.envelope.digest(), options.created_at});
      } catch (const Error& e) {
        slot.skip = SkipEntry{image_id, e.what()};
      }
      finish_slot(job.index);
    }
  }

  result.unprocessed = pending.size() - pos;
  auto out = collect();
  // Transient failures never reach a slot; keep them in the skip log.
  for (auto& s : result.skipped) out.skipped.push_back(std::move(s));
  return out;
}

}  // namespace clover::gen
