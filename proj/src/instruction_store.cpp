// SPDX-License-Identifier: Apache-2.0
#include "clover/instruction_store.hpp"

#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "clover/error.hpp"
#include "clover/prompt.hpp"

namespace clover::store {

InstructionDataset::InstructionDataset(std::vector<Instruction> items, Manifest manifest)
    : items_(std::move(items)), manifest_(std::move(manifest)) {
  std::unordered_set<std::string_view> ids;
  manifest_.generation_count = 0;
  manifest_.template_count = 0;
  for (const auto& ins : items_) {
    if (!ids.insert(ins.id).second) throw IntegrityError(fmt::format("duplicate instruction_id {}", ins.id));
    if (ins.kind == InstructionKind::generation_based) {
      ++manifest_.generation_count;
    } else {
      ++manifest_.template_count;
    }
  }
}

std::string InstructionDataset::digest() const {
  std::string joined;
  joined.reserve(items_.size() * 65);
  for (const auto& ins : items_) {
    joined += ins.id;
    joined += '\n';
  }
  return sha256_hex(joined);
}

InstructionDataset assemble_hybrid(const InstructionDataset& gen, const InstructionDataset& tmpl) {
  std::vector<Instruction> items;
  items.reserve(gen.size() + tmpl.size());
  std::unordered_map<std::string, std::size_t> index;
  for (const auto* part : {&gen, &tmpl}) {
    for (const auto& ins : part->items()) {
      auto [it, inserted] = index.try_emplace(ins.id, items.size());
      if (inserted) {
        items.push_back(ins);
      } else if (!items[it->second].same_content(ins)) {
        throw IntegrityError(fmt::format("instruction_id {} appears with different content", ins.id));
      }
    }
  }
  Manifest m;
  m.source_digests = {gen.digest(), tmpl.digest()};
  m.note = "assemble_hybrid";
  return InstructionDataset(std::move(items), std::move(m));
}

std::vector<InstructionDataset> split_subsets(const InstructionDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (k > ds.size()) throw InvalidArgument(fmt::format("k={} exceeds item count {}", k, ds.size()));
  if (k == 1) return {ds};

  Rng rng(seed);
  const auto order = sample_indices(ds.size(), ds.size(), rng);
  std::vector<std::vector<Instruction>> parts(k);
  for (auto& p : parts) p.reserve(ds.size() / k + 1);
  for (std::size_t t = 0; t < order.size(); ++t) parts[t % k].push_back(ds.items()[order[t]]);

  std::vector<InstructionDataset> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Manifest m;
    m.source_digests = {ds.digest()};
    m.seed = seed;
    m.note = fmt::format("split_subsets {}/{}", i + 1, k);
    out.emplace_back(std::move(parts[i]), std::move(m));
  }
  return out;
}

InstructionDataset sample_scale(const InstructionDataset& ds, std::size_t size, std::uint64_t seed) {
  if (size > ds.size()) {
    throw InvalidArgument(fmt::format("sample size {} exceeds item count {}", size, ds.size()));
  }
  Rng rng(seed);
  std::vector<Instruction> items;
  items.reserve(size);
  for (auto i : sample_indices(ds.size(), size, rng)) items.push_back(ds.items()[i]);
  Manifest m;
  m.source_digests = {ds.digest()};
  m.seed = seed;
  m.note = fmt::format("sample_scale {}", size);
  return InstructionDataset(std::move(items), std::move(m));
}

std::string to_jsonl(const InstructionDataset& ds) {
  std::vector<json> rows;
  rows.reserve(ds.size());
  for (const auto& ins : ds.items()) rows.push_back(to_json(ins));
  return clover::to_jsonl(rows);
}

json manifest_to_json(const InstructionDataset& ds) {
  const auto& m = ds.manifest();
  return json{{"counts", {{"generation", m.generation_count}, {"template", m.template_count}, {"total", ds.size()}}},
              {"digest", ds.digest()},
              {"source_digests", m.source_digests},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"note", m.note},
              {"prng", Rng::kAlgorithm},
              {"tool_version", kToolVersion}};
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p += ".manifest.json";
  return p;
}

void write_dataset(const std::filesystem::path& path, const InstructionDataset& ds) {
  atomic_write_file(path, to_jsonl(ds));
  atomic_write_file(manifest_path(path), manifest_to_json(ds).dump(2) + "\n");
}

InstructionDataset read_dataset(const std::filesystem::path& path) {
  std::vector<Instruction> items;
  for_each_jsonl(path, [&](const json& j, std::size_t line) { items.push_back(instruction_from_json(j, line)); });
  Manifest m;
  if (const auto mp = manifest_path(path); std::filesystem::exists(mp)) {
    try {
      const auto j = json::parse(read_file(mp));
      m.source_digests = j.value("source_digests", std::vector<std::string>{});
      if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
      m.note = j.value("note", "");
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}: {}", mp.string(), e.what()));
    }
  }
  try {
    return InstructionDataset(std::move(items), std::move(m));
  } catch (const IntegrityError& e) {
    throw IntegrityError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string to_stage2_jsonl(const InstructionDataset& ds) {
  std::vector<json> rows;
  for (const auto& ins : ds.items()) {
    for (const auto& t : ins.turns) {
      rows.push_back(json{{"image_id", ins.image_id},
                          {"text_input", gen::stage2_input(t.question)},
                          {"text_output", t.answer}});
    }
  }
  return clover::to_jsonl(rows);
}

}  // namespace clover::store
