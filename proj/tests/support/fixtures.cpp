// SPDX-License-Identifier: Apache-2.0
#include "support/fixtures.hpp"

#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include <fmt/format.h>

#include "clover/cli.hpp"
#include "clover/util.hpp"

namespace clover::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "clover-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path data_dir() { return CLOVER_DATA_DIR; }
fs::path test_dir() { return CLOVER_TEST_DIR; }

namespace {

const std::vector<std::string> kWords{
    "glandular", "epithelium", "shows",    "marked",   "nuclear",  "atypia",   "with",      "prominent",
    "nucleoli",  "and",        "scattered", "mitoses", "stroma",   "contains", "lymphocytes", "plasma",
    "cells",     "the",        "mucosa",   "is",       "eroded",   "focal",    "necrosis",  "present",
    "crypts",    "appear",     "distorted", "branching", "fibrosis", "surrounds", "tumor",   "nests"};

std::string words(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[rng.below(kWords.size())];
  }
  return s;
}

}  // namespace

corpus::Corpus synthetic_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  corpus::Corpus c;
  c.seed = seed;
  c.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus::ImageTextRecord r;
    r.image_id = fmt::format("img-{:06d}", i);
    r.image_ref = fmt::format("images/{}.png", r.image_id);
    r.captions = {words(rng, 18) + ".", words(rng, 12) + "."};
    r.merged_caption = corpus::merge_captions(r.captions);
    r.source = "synthetic";
    c.records.push_back(std::move(r));
  }
  return c;
}

std::vector<Instruction> synthetic_instructions(std::size_t n, InstructionKind kind, const std::string& tag) {
  std::vector<Instruction> out;
  out.reserve(n);
  const Provenance prov{kind == InstructionKind::template_based ? "template" : "generation",
                        std::nullopt, std::nullopt, "2024-01-01T00:00:00Z"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Turn> turns{{fmt::format("What is shown in region {}?", i), fmt::format("Answer {} for {}", i, tag)}};
    out.push_back(make_instruction(fmt::format("{}-{:06d}", tag, i), kind, std::move(turns), prov));
  }
  return out;
}

std::string clean_qa_text() {
  return "Question: What type of tissue is visible in the image?\n"
         "Answer: The image shows gastric mucosa with glandular structures.\n"
         "\n"
         "Question: Are there signs of inflammation?\n"
         "Answer: Scattered lymphocytes and plasma cells are seen in the lamina propria.\n"
         "\n"
         "Question: What do the glands look like?\n"
         "Answer: The glands appear irregular and crowded in the image.\n"
         "\n"
         "Question: Is there any necrosis in the image?\n"
         "Answer: Focal necrosis is present near the surface. A pathologist should confirm the findings.\n";
}

void write_fixture(const fs::path& dir, const gen::PromptEnvelope& envelope, const std::string& text) {
  fs::create_directories(dir);
  atomic_write_file(dir / (envelope.digest() + ".txt"), text);
}

ClinicalRegistry synthetic_clinical_registry() {
  struct Group {
    const char* organ;
    const char* label;
    std::size_t patches;
    std::size_t train_wsis;
    std::size_t test_wsis;
  };
  // stomach 13 WSIs, intestine 25; train 5 + 10 = 15, test 8 + 15 = 23.
  const Group groups[] = {
      {"stomach", "tumor", 1136, 2, 4},
      {"stomach", "non_tumor", 2079, 3, 4},
      {"intestine", "tumor", 1846, 5, 7},
      {"intestine", "non_tumor", 2051, 5, 8},
  };
  ClinicalRegistry reg;
  std::ostringstream csv;
  csv << "patch_id,wsi_id,organ,label,patch_ref\n";
  std::size_t patch_no = 0;
  for (const auto& g : groups) {
    const std::size_t wsis = g.train_wsis + g.test_wsis;
    for (std::size_t w = 0; w < wsis; ++w) {
      const auto wsi = fmt::format("{}-{}-wsi{:02d}", g.organ, g.label, w);
      if (w >= g.train_wsis) reg.test_wsis.push_back(wsi);
      const std::size_t share = g.patches / wsis + (w < g.patches % wsis ? 1 : 0);
      for (std::size_t p = 0; p < share; ++p, ++patch_no) {
        csv << fmt::format("p{:05d},{},{},{},patches/{}/{:04d}.png\n", patch_no, wsi, g.organ, g.label, wsi, p);
      }
    }
  }
  reg.csv = csv.str();
  return reg;
}

RunResult run_forge(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"clover-forge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  RunResult r;
  r.exit_code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

RunResult run_forge(std::initializer_list<std::string> args) { return run_forge(std::vector<std::string>(args)); }

int run_forge_binary(const std::string& args, const fs::path& stdout_file) {
  std::string cmd = fmt::format("'{}' {}", CLOVER_FORGE_BIN, args);
  cmd += stdout_file.empty() ? " >/dev/null" : fmt::format(" >'{}'", stdout_file.string());
  cmd += " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace clover::testing
