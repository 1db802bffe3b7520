// SPDX-License-Identifier: Apache-2.0
#include "clover/cli.hpp"

#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "clover/backend.hpp"
#include "clover/clinical_fewshot.hpp"
#include "clover/config.hpp"
#include "clover/corpus.hpp"
#include "clover/error.hpp"
#include "clover/generation.hpp"
#include "clover/instruction_store.hpp"
#include "clover/kernel_check.hpp"
#include "clover/qa_text.hpp"
#include "clover/template_forge.hpp"
#include "clover/vqa_metrics.hpp"

namespace clover::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigFlag {
  std::string key;
  std::optional<std::string> value;
};

struct Context {
  std::optional<std::string> config_path;
  std::deque<ConfigFlag> flags;
  std::optional<std::string> created_at;
  Config cfg;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  fs::path out_dir() const {
    fs::path dir = cfg.output_dir();
    fs::create_directories(dir);
    return dir;
  }
  fs::path output(const std::optional<std::string>& explicit_path, const std::string& default_name) const {
    if (explicit_path) {
      fs::path p = *explicit_path;
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      return p;
    }
    return out_dir() / default_name;
  }
  std::string timestamp() const { return created_at ? *created_at : utc_timestamp(); }
};

// A flag that overrides a config key.
void bind(CLI::App* sub, Context& ctx, const std::string& flag, const std::string& key, const std::string& help) {
  auto& slot = ctx.flags.emplace_back(ConfigFlag{key, std::nullopt});
  sub->add_option(flag, slot.value, help + " [" + key + "]");
}

void add_common(CLI::App* sub, Context& ctx) {
  sub->add_option("--config", ctx.config_path, "config file (default: $CLOVER_CONFIG)");
  bind(sub, ctx, "--seed", "seed", "PRNG seed");
  bind(sub, ctx, "--out-dir", "paths.output_dir", "output directory");
}

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_text(const fs::path& path, const std::string& text) { atomic_write_file(path, text); }

std::string usd(std::int64_t nano) { return fmt::format("{:.6f}", gen::nano_to_usd(nano)); }

gen::Rates config_rates(const Config& cfg) {
  return gen::Rates::from_usd_per_1k(cfg.require_double("backend.rate_in_usd_per_1k"),
                                     cfg.require_double("backend.rate_out_usd_per_1k"));
}

std::vector<gen::FewShotExample> config_fewshot(const Config& cfg) {
  auto path = cfg.get("paths.fewshot");
  if (!path) return {};
  return gen::load_fewshot(*path);
}

std::unique_ptr<gen::CompletionBackend> make_backend(const Config& cfg) {
  if (cfg.live()) {
    gen::HttpBackendConfig hc;
    hc.endpoint = cfg.require("backend.endpoint");
    hc.dialect = cfg.get_or("backend.dialect", hc.dialect);
    hc.model = cfg.get_or("backend.model", "");
    hc.temperature = cfg.get_double("backend.temperature", hc.temperature);
    hc.timeout = std::chrono::seconds(cfg.get_int("backend.timeout_s", hc.timeout.count()));
    if (const char* key = std::getenv("CLOVER_API_KEY")) hc.api_key = key;
    return std::make_unique<gen::HttpBackend>(std::move(hc));
  }
  return std::make_unique<gen::MockBackend>(cfg.require("paths.fixtures"));
}

clinical::Organ parse_organ_flag(const std::string& s) {
  try {
    return clinical::parse_organ(s);
  } catch (const ParseError& e) {
    throw InvalidArgument(e.what());
  }
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pathology instruction data toolkit", "clover-forge"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  std::map<CLI::App*, std::function<int()>> handlers;

  // ingest
  {
    auto* sub = app.add_subcommand("ingest", "merge, filter and sample an image-text manifest");
    add_common(sub, ctx);
    bind(sub, ctx, "--manifest", "paths.manifest", "JSONL or CSV manifest");
    auto format = std::make_shared<std::optional<std::string>>();
    auto min_words = std::make_shared<std::size_t>(25);
    auto sample_size = std::make_shared<std::optional<std::size_t>>();
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--format", *format, "jsonl or csv (default: from extension)");
    sub->add_option("--min-words", *min_words, "minimum words in the merged caption")->capture_default_str();
    sub->add_option("--sample", *sample_size, "keep a seeded random subset of this size");
    sub->add_option("--out", *out_path, "output corpus JSONL (default: <out-dir>/corpus.jsonl)");
    handlers[sub] = [&ctx, format, min_words, sample_size, out_path] {
      const fs::path manifest = ctx.cfg.require("paths.manifest");
      const auto fmt_kind = *format ? corpus::parse_format(**format) : corpus::format_from_path(manifest);
      auto raw = corpus::ingest_manifest(manifest, fmt_kind);
      const std::size_t raw_count = raw.records.size();
      auto kept = corpus::merge_and_filter(std::move(raw), *min_words);
      const std::size_t kept_count = kept.records.size();
      const auto seed = ctx.cfg.seed();
      if (*sample_size) kept = corpus::sample(kept, **sample_size, seed);
      kept.seed = seed;
      const auto path = ctx.output(*out_path, "corpus.jsonl");
      corpus::write_corpus(path, kept);
      *ctx.out << fmt::format("ingest: {} records, {} kept with >= {} words, {} written, {} duplicate captions dropped -> {}\n",
                              raw_count, kept_count, *min_words, kept.records.size(), kept.duplicate_captions_dropped,
                              path.string());
      return kExitOk;
    };
  }

  // gen-template
  {
    auto* sub = app.add_subcommand("gen-template", "one template question per image, caption as answer");
    add_common(sub, ctx);
    bind(sub, ctx, "--corpus", "paths.corpus", "ingested corpus JSONL");
    bind(sub, ctx, "--templates", "paths.templates", "statement bank (default: built-in 17)");
    sub->add_option("--created-at", ctx.created_at, "provenance timestamp (default: now or SOURCE_DATE_EPOCH)");
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--out", *out_path, "output dataset (default: <out-dir>/template.jsonl)");
    handlers[sub] = [&ctx, out_path] {
      const fs::path corpus_path = ctx.cfg.require("paths.corpus");
      const auto corpus = corpus::read_corpus(corpus_path);
      auto templates = ctx.cfg.get("paths.templates");
      const auto bank = templates ? template_forge::TemplateBank::load(*templates) : template_forge::TemplateBank::defaults();
      const auto seed = ctx.cfg.seed();
      auto items = template_forge::build_template_instructions(corpus, bank, seed, ctx.timestamp());
      store::Manifest m;
      m.source_digests = {file_digest(corpus_path)};
      m.seed = seed;
      m.note = "gen-template";
      store::InstructionDataset ds(std::move(items), m);
      const auto path = ctx.output(*out_path, "template.jsonl");
      store::write_dataset(path, ds);
      *ctx.out << fmt::format("gen-template: {} instructions from {} statements -> {}\n", ds.size(), bank.size(),
                              path.string());
      return kExitOk;
    };
  }

  // gen-qa
  {
    auto* sub = app.add_subcommand("gen-qa", "generate question-answer instructions from captions");
    add_common(sub, ctx);
    bind(sub, ctx, "--corpus", "paths.corpus", "ingested corpus JSONL");
    bind(sub, ctx, "--fewshot", "paths.fewshot", "few-shot examples JSONL");
    bind(sub, ctx, "--fixtures", "paths.fixtures", "mock fixture directory");
    bind(sub, ctx, "--budget-usd", "budget_usd", "spend cap in USD");
    bind(sub, ctx, "--max-concurrency", "backend.max_concurrency", "requests in flight");
    sub->add_option("--created-at", ctx.created_at, "provenance timestamp (default: now or SOURCE_DATE_EPOCH)");
    auto strict = std::make_shared<bool>(false);
    auto dry_run = std::make_shared<bool>(false);
    auto caption = std::make_shared<std::optional<std::string>>();
    auto checkpoint = std::make_shared<std::optional<std::string>>();
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_flag("--strict", *strict, "drop records that fail parsing or lint [strict_parse]");
    sub->add_flag("--dry-run", *dry_run, "print the prompt envelope for one caption and exit");
    sub->add_option("--caption", *caption, "caption for --dry-run (default: first corpus record)");
    sub->add_option("--checkpoint", *checkpoint, "JSONL checkpoint for resumable runs");
    sub->add_option("--out", *out_path, "output dataset, or envelope file with --dry-run");
    handlers[sub] = [&ctx, strict, dry_run, caption, checkpoint, out_path] {
      const auto fewshot = config_fewshot(ctx.cfg);

      if (*dry_run) {
        std::string text;
        if (*caption) {
          text = **caption;
        } else {
          const auto corpus = corpus::read_corpus(ctx.cfg.require("paths.corpus"));
          if (corpus.records.empty()) throw InvalidArgument("corpus is empty; pass --caption");
          const auto& r = corpus.records.front();
          text = r.merged_caption.empty() ? corpus::merge_captions(r.captions) : r.merged_caption;
        }
        const auto envelope = gen::build_prompt(text, fewshot);
        const std::string body = envelope.to_json().dump(2) + "\n";
        if (*out_path) {
          const auto path = ctx.output(*out_path, "");
          write_text(path, body);
          *ctx.out << fmt::format("gen-qa: dry run, {} messages, digest {} -> {}\n", envelope.messages().size(),
                                  envelope.digest(), path.string());
        } else {
          *ctx.out << body;
        }
        return kExitOk;
      }

      const fs::path corpus_path = ctx.cfg.require("paths.corpus");
      const auto corpus = corpus::read_corpus(corpus_path);
      auto backend = make_backend(ctx.cfg);

      gen::GenerationOptions opt;
      opt.fewshot = fewshot;
      opt.rates = config_rates(ctx.cfg);
      opt.budget_nanousd = gen::usd_to_nano(ctx.cfg.require_double("budget_usd"));
      opt.max_completion_tokens = ctx.cfg.get_int("backend.max_completion_tokens", opt.max_completion_tokens);
      opt.max_concurrency = static_cast<std::size_t>(ctx.cfg.get_int("backend.max_concurrency", 4));
      opt.retry.max_retries = static_cast<int>(ctx.cfg.get_int("backend.max_retries", opt.retry.max_retries));
      opt.retry.base_delay = std::chrono::milliseconds(ctx.cfg.get_int("backend.base_delay_ms", 1000));
      opt.retry.max_delay = std::chrono::milliseconds(ctx.cfg.get_int("backend.max_delay_ms", 60000));
      opt.strict = *strict || ctx.cfg.get_bool("strict_parse", false);
      opt.model = ctx.cfg.live() ? ctx.cfg.get_or("backend.model", "") : backend->id();
      opt.created_at = ctx.timestamp();
      if (*checkpoint) opt.checkpoint = fs::path(**checkpoint);

      const auto path = ctx.output(*out_path, "generation.jsonl");
      auto write_outputs = [&](const gen::GenerationResult& r) {
        store::Manifest m;
        m.source_digests = {file_digest(corpus_path)};
        m.note = "gen-qa";
        store::write_dataset(path, store::InstructionDataset(r.instructions, m));
        std::vector<json> skips, receipts;
        for (const auto& s : r.skipped) skips.push_back(gen::to_json(s));
        for (const auto& rc : r.receipts) receipts.push_back(gen::to_json(rc));
        write_text(fs::path(path.string() + ".skips.jsonl"), to_jsonl(skips));
        write_text(fs::path(path.string() + ".receipts.jsonl"), to_jsonl(receipts));
      };

      gen::GenerationResult result;
      try {
        result = gen::generate_instructions(corpus, *backend, opt);
      } catch (const gen::GenerationAborted& e) {
        write_outputs(e.partial());
        throw;
      }
      write_outputs(result);
      for (const auto& w : result.warnings) *ctx.err << "warning: " << w << '\n';
      *ctx.out << fmt::format("gen-qa: {} instructions, {} skipped, {} resumed, cost {} USD of {} USD -> {}\n",
                              result.instructions.size(), result.skipped.size(), result.resumed,
                              usd(result.total_cost_nanousd()), usd(opt.budget_nanousd), path.string());
      if (result.halted_by_budget) {
        *ctx.err << fmt::format("error: budget cap reached; {} records left unprocessed\n", result.unprocessed);
        return kExitError;
      }
      return kExitOk;
    };
  }

  // lint
  {
    auto* sub = app.add_subcommand("lint", "check QA text for magnifications, dates and meta phrases");
    add_common(sub, ctx);
    auto input = std::make_shared<std::optional<std::string>>();
    auto dataset = std::make_shared<std::optional<std::string>>();
    auto fail = std::make_shared<bool>(false);
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--input", *input, "QA text file");
    sub->add_option("--dataset", *dataset, "instruction dataset JSONL");
    sub->add_flag("--fail-on-violation", *fail, "exit 1 when anything is flagged");
    sub->add_option("--out", *out_path, "violation report JSONL (default: <out-dir>/lint.jsonl)");
    handlers[sub] = [&ctx, input, dataset, fail, out_path] {
      if (!*input == !*dataset) throw InvalidArgument("lint needs exactly one of --input or --dataset");
      std::vector<json> rows;
      std::size_t pairs = 0;
      auto run = [&](const std::vector<gen::QAPair>& qa, const std::string& source) {
        pairs += qa.size();
        for (const auto& v : gen::lint_qa(qa).violations) {
          rows.push_back(json{{"source", source},       {"rule_id", v.rule_id}, {"pair_index", v.pair_index},
                              {"field", v.field},       {"begin", v.begin},     {"end", v.end},
                              {"excerpt", v.excerpt}});
        }
      };
      if (*input) {
        run(gen::parse_qa(read_file(**input), false).pairs, **input);
      } else {
        for (const auto& ins : store::read_dataset(**dataset).items()) {
          std::vector<gen::QAPair> qa;
          for (const auto& t : ins.turns) qa.push_back({t.question, t.answer});
          run(qa, ins.id);
        }
      }
      const auto path = ctx.output(*out_path, "lint.jsonl");
      write_text(path, to_jsonl(rows));
      *ctx.out << fmt::format("lint: {} pairs checked, {} violations -> {}\n", pairs, rows.size(), path.string());
      return (*fail && !rows.empty()) ? kExitError : kExitOk;
    };
  }

  // assemble
  {
    auto* sub = app.add_subcommand("assemble", "merge generation and template datasets into a hybrid set");
    add_common(sub, ctx);
    auto gen_path = std::make_shared<std::string>();
    auto tmpl_path = std::make_shared<std::string>();
    auto stage2 = std::make_shared<std::optional<std::string>>();
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--gen", *gen_path, "generation dataset")->required();
    sub->add_option("--template", *tmpl_path, "template dataset")->required();
    sub->add_option("--stage2", *stage2, "also export stage-two training rows to this JSONL");
    sub->add_option("--out", *out_path, "output dataset (default: <out-dir>/hybrid.jsonl)");
    handlers[sub] = [&ctx, gen_path, tmpl_path, stage2, out_path] {
      const auto hybrid = store::assemble_hybrid(store::read_dataset(*gen_path), store::read_dataset(*tmpl_path));
      const auto path = ctx.output(*out_path, "hybrid.jsonl");
      store::write_dataset(path, hybrid);
      if (*stage2) write_text(ctx.output(*stage2, ""), store::to_stage2_jsonl(hybrid));
      *ctx.out << fmt::format("assemble: {} generation + {} template = {} instructions -> {}\n",
                              hybrid.manifest().generation_count, hybrid.manifest().template_count, hybrid.size(),
                              path.string());
      return kExitOk;
    };
  }

  // split-subsets
  {
    auto* sub = app.add_subcommand("split-subsets", "seeded split into k disjoint subsets");
    add_common(sub, ctx);
    auto input = std::make_shared<std::string>();
    auto k = std::make_shared<std::size_t>(0);
    sub->add_option("--input", *input, "instruction dataset")->required();
    sub->add_option("--k", *k, "number of subsets")->required();
    handlers[sub] = [&ctx, input, k] {
      const auto parts = store::split_subsets(store::read_dataset(*input), *k, ctx.cfg.seed());
      const auto dir = ctx.out_dir();
      std::vector<std::string> sizes;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        store::write_dataset(dir / fmt::format("subset_{}.jsonl", i + 1), parts[i]);
        sizes.push_back(std::to_string(parts[i].size()));
      }
      *ctx.out << fmt::format("split-subsets: {} subsets of sizes {} -> {}\n", parts.size(), fmt::join(sizes, ","),
                              dir.string());
      return kExitOk;
    };
  }

  // sample-scale
  {
    auto* sub = app.add_subcommand("sample-scale", "seeded subset of a given size");
    add_common(sub, ctx);
    auto input = std::make_shared<std::string>();
    auto size = std::make_shared<std::size_t>(0);
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--input", *input, "instruction dataset")->required();
    sub->add_option("--size", *size, "items to keep")->required();
    sub->add_option("--out", *out_path, "output dataset (default: <out-dir>/sample_<size>.jsonl)");
    handlers[sub] = [&ctx, input, size, out_path] {
      const auto ds = store::sample_scale(store::read_dataset(*input), *size, ctx.cfg.seed());
      const auto path = ctx.output(*out_path, fmt::format("sample_{}.jsonl", *size));
      store::write_dataset(path, ds);
      *ctx.out << fmt::format("sample-scale: {} instructions -> {}\n", ds.size(), path.string());
      return kExitOk;
    };
  }

  // eval-vqa
  {
    auto* sub = app.add_subcommand("eval-vqa", "score predictions: closed accuracy, open recall, P/R/F1");
    add_common(sub, ctx);
    auto input = std::make_shared<std::string>();
    auto params = std::make_shared<std::optional<std::int64_t>>();
    auto polarity = std::make_shared<std::optional<std::string>>();
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--input", *input, "JSONL {example_id, question, reference, prediction, qtype}")->required();
    sub->add_option("--params", *params, "trainable parameters, adds cost ratios");
    sub->add_option("--polarity", *polarity, "closed answer pair, e.g. positive,negative (default yes,no)");
    sub->add_option("--out", *out_path, "report JSON (default: <out-dir>/eval_report.json)");
    handlers[sub] = [&ctx, input, params, polarity, out_path] {
      metrics::EvalOptions opt;
      opt.trainable_params = *params;
      if (*polarity) {
        const auto comma = (*polarity)->find(',');
        if (comma == std::string::npos) throw InvalidArgument("--polarity expects two comma-separated words");
        opt.polarity = {(*polarity)->substr(0, comma), (*polarity)->substr(comma + 1)};
      }
      const auto examples = metrics::read_examples(*input);
      const auto report = metrics::evaluate(examples, opt);
      const auto path = ctx.output(*out_path, "eval_report.json");
      write_text(path, metrics::to_json(report).dump(2) + "\n");
      for (const auto& w : report.warnings) *ctx.err << "warning: " << w << '\n';
      *ctx.out << metrics::format_table(report);
      *ctx.out << fmt::format("eval-vqa: {} open, {} closed -> {}\n", report.n_open, report.n_closed, path.string());
      return kExitOk;
    };
  }

  // cost-ratio
  {
    auto* sub = app.add_subcommand("cost-ratio", "metric divided by log10 of trainable parameters in millions");
    add_common(sub, ctx);
    auto metric = std::make_shared<double>(0);
    auto params = std::make_shared<std::int64_t>(0);
    sub->add_option("--metric", *metric, "metric in percent")->required();
    sub->add_option("--params", *params, "trainable parameter count")->required();
    handlers[sub] = [&ctx, metric, params] {
      *ctx.out << fmt::format("{:.2f}\n", metrics::round2(metrics::cost_ratio(*metric, *params)));
      return kExitOk;
    };
  }

  // fewshot-split
  {
    auto* sub = app.add_subcommand("fewshot-split", "K-shot WSI-grouped train/test splits for one organ");
    add_common(sub, ctx);
    bind(sub, ctx, "--patches", "paths.patches", "patch manifest CSV");
    bind(sub, ctx, "--test-wsis", "paths.test_wsis", "test WSI list");
    auto organ = std::make_shared<std::string>();
    auto k = std::make_shared<std::size_t>(0);
    auto replicates = std::make_shared<std::size_t>(5);
    sub->add_option("--organ", *organ, "stomach or intestine")->required();
    sub->add_option("--k", *k, "WSIs per class")->required();
    sub->add_option("--replicates", *replicates, "independent draws")->capture_default_str();
    handlers[sub] = [&ctx, organ, k, replicates] {
      const auto patches = clinical::ingest_patches(ctx.cfg.require("paths.patches"));
      const auto test = clinical::read_wsi_list(ctx.cfg.require("paths.test_wsis"));
      const auto o = parse_organ_flag(*organ);
      const auto splits = clinical::make_kshot(patches, o, *k, test, ctx.cfg.seed(), *replicates);
      const auto dir = ctx.out_dir();
      for (const auto& s : splits) {
        write_text(dir / fmt::format("fewshot_{}_k{}_r{}.jsonl", clinical::to_string(o), *k, s.replicate_index),
                   clinical::to_json(s).dump() + "\n");
      }
      *ctx.out << fmt::format("fewshot-split: {} {}-shot replicates for {}, {} test patches -> {}\n", splits.size(),
                              *k, clinical::to_string(o), splits.front().test_patches.size(), dir.string());
      return kExitOk;
    };
  }

  // to-vqa
  {
    auto* sub = app.add_subcommand("to-vqa", "render patches as cancer-detection VQA records");
    add_common(sub, ctx);
    bind(sub, ctx, "--patches", "paths.patches", "patch manifest CSV");
    auto split = std::make_shared<std::optional<std::string>>();
    auto part = std::make_shared<std::string>("test");
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--split", *split, "restrict to the patches of a fewshot-split file");
    sub->add_option("--part", *part, "train or test, with --split")->capture_default_str();
    sub->add_option("--out", *out_path, "output JSONL (default: <out-dir>/vqa.jsonl)");
    handlers[sub] = [&ctx, split, part, out_path] {
      auto patches = clinical::ingest_patches(ctx.cfg.require("paths.patches"));
      if (*split) {
        if (*part != "train" && *part != "test") throw InvalidArgument("--part must be train or test");
        const auto j = json::parse(read_file(**split));
        std::set<std::string> keep;
        for (const auto& p : j.at(*part + "_patches")) keep.insert(p.at("patch_id").get<std::string>());
        std::erase_if(patches, [&](const auto& p) { return !keep.count(p.patch_id); });
      }
      std::vector<json> rows;
      for (const auto& e : clinical::to_vqa(patches)) rows.push_back(metrics::example_to_json(e));
      const auto path = ctx.output(*out_path, "vqa.jsonl");
      write_text(path, to_jsonl(rows));
      *ctx.out << fmt::format("to-vqa: {} records -> {}\n", rows.size(), path.string());
      return kExitOk;
    };
  }

  // kernel-check
  {
    auto* sub = app.add_subcommand("kernel-check", "loss identities, invariances and gradient checks");
    add_common(sub, ctx);
    auto cases = std::make_shared<std::size_t>(1000);
    auto fixture = std::make_shared<std::optional<std::string>>();
    auto temperature = std::make_shared<double>(0.07);
    sub->add_option("--cases", *cases, "random cases for the likelihood identity")->capture_default_str();
    sub->add_option("--fixture", *fixture, "embedding batch JSON {shape, data} to evaluate");
    sub->add_option("--temperature", *temperature, "contrastive temperature")->capture_default_str();
    handlers[sub] = [&ctx, cases, fixture, temperature] {
      loss::KernelCheckOptions opt;
      opt.seed = ctx.cfg.seed();
      opt.random_cases = *cases;
      opt.temperature = *temperature;
      if (*fixture) opt.fixture = loss::EmbeddingBatch::from_json(json::parse(read_file(**fixture)));
      const auto report = loss::run_kernel_checks(opt);
      const std::string body = report.to_json().dump(2) + "\n";
      const auto path = ctx.out_dir() / "kernel_check.json";
      write_text(path, body);
      *ctx.out << body;
      const auto passed = std::count_if(report.checks.begin(), report.checks.end(), [](auto& c) { return c.passed; });
      *ctx.err << fmt::format("kernel-check: {}/{} checks passed -> {}\n", passed, report.checks.size(), path.string());
      return report.all_passed() ? kExitOk : kExitError;
    };
  }

  // cost-estimate
  {
    auto* sub = app.add_subcommand("cost-estimate", "upper-bound spend for a generation run, or actual spend from receipts");
    add_common(sub, ctx);
    bind(sub, ctx, "--corpus", "paths.corpus", "ingested corpus JSONL");
    bind(sub, ctx, "--fewshot", "paths.fewshot", "few-shot examples JSONL");
    bind(sub, ctx, "--budget-usd", "budget_usd", "spend cap in USD");
    auto receipts = std::make_shared<std::optional<std::string>>();
    auto out_path = std::make_shared<std::optional<std::string>>();
    sub->add_option("--receipts", *receipts, "receipts JSONL from gen-qa; reports actual spend instead");
    sub->add_option("--out", *out_path, "report JSON (default: <out-dir>/cost_estimate.json)");
    handlers[sub] = [&ctx, receipts, out_path] {
      const auto rates = config_rates(ctx.cfg);
      json report{{"rate_in_micro_usd_per_1k", rates.in_micro_per_1k},
                  {"rate_out_micro_usd_per_1k", rates.out_micro_per_1k}};
      std::string line;
      if (*receipts) {
        std::int64_t total = 0, prompt = 0, completion = 0;
        std::size_t n = 0;
        for_each_jsonl(**receipts, [&](const json& j, std::size_t) {
          const auto r = gen::receipt_from_json(j);
          total += r.cost_nanousd;
          prompt += r.prompt_tokens;
          completion += r.completion_tokens;
          ++n;
        });
        const std::int64_t recomputed = gen::cost_nanousd(prompt, completion, rates);
        report.update({{"receipts", n},
                       {"prompt_tokens", prompt},
                       {"completion_tokens", completion},
                       {"receipt_cost_usd", gen::nano_to_usd(total)},
                       {"recomputed_cost_usd", gen::nano_to_usd(recomputed)}});
        if (recomputed != total) {
          throw IntegrityError(fmt::format("receipts sum to {} USD but token totals price at {} USD", usd(total),
                                           usd(recomputed)));
        }
        line = fmt::format("cost-estimate: {} receipts, {} prompt + {} completion tokens, {} USD", n, prompt,
                           completion, usd(total));
      } else {
        const auto corpus = corpus::read_corpus(ctx.cfg.require("paths.corpus"));
        const auto fewshot = config_fewshot(ctx.cfg);
        const auto max_completion = ctx.cfg.get_int("backend.max_completion_tokens", 512);
        std::int64_t projected = 0, estimated = 0;
        for (const auto& r : corpus.records) {
          const auto env = gen::build_prompt(r.merged_caption.empty() ? corpus::merge_captions(r.captions)
                                                                      : r.merged_caption,
                                             fewshot);
          projected += gen::projected_cost_nanousd(env, max_completion, rates);
          estimated += gen::cost_nanousd(gen::estimate_prompt_tokens(env), 0, rates);
        }
        report.update({{"records", corpus.records.size()},
                       {"max_completion_tokens", max_completion},
                       {"projected_upper_bound_usd", gen::nano_to_usd(projected)},
                       {"estimated_prompt_cost_usd", gen::nano_to_usd(estimated)}});
        line = fmt::format("cost-estimate: {} records, upper bound {} USD, prompt-only estimate {} USD",
                           corpus.records.size(), usd(projected), usd(estimated));
        if (auto budget = ctx.cfg.get("budget_usd")) {
          const auto cap = gen::usd_to_nano(ctx.cfg.require_double("budget_usd"));
          report["budget_usd"] = gen::nano_to_usd(cap);
          report["fits_budget"] = projected <= cap;
          line += projected <= cap ? ", fits budget" : ", exceeds budget";
        }
      }
      const auto path = ctx.output(*out_path, "cost_estimate.json");
      write_text(path, report.dump(2) + "\n");
      *ctx.out << line << " -> " << path.string() << '\n';
      return kExitOk;
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    ctx.cfg = Config::resolve(ctx.config_path ? std::optional<fs::path>(*ctx.config_path) : std::nullopt);
    for (const auto& f : ctx.flags) {
      if (f.value) ctx.cfg.set(f.key, *f.value);
    }
    ctx.cfg.validate();
    return handlers.at(chosen)();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace clover::cli
