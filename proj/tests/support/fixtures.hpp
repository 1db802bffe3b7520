// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "clover/clinical_fewshot.hpp"
#include "clover/corpus.hpp"
#include "clover/instruction.hpp"
#include "clover/prompt.hpp"

namespace clover::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path data_dir();
std::filesystem::path test_dir();

/// n records with merged captions of 30+ words, ids img-000000...
corpus::Corpus synthetic_corpus(std::size_t n, std::uint64_t seed = 7);

/// n valid instructions of one kind; `tag` keeps ids distinct across sets.
std::vector<Instruction> synthetic_instructions(std::size_t n, InstructionKind kind, const std::string& tag);

/// Four clean pairs in canonical form.
std::string clean_qa_text();

/// Writes `text` as the mock completion for `envelope`.
void write_fixture(const std::filesystem::path& dir, const gen::PromptEnvelope& envelope, const std::string& text);

/// 38-WSI registry at the published per-organ, per-class patch counts.
struct ClinicalRegistry {
  std::string csv;
  std::vector<std::string> test_wsis;  // 23 ids, 8 stomach and 15 intestine
};
ClinicalRegistry synthetic_clinical_registry();

struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

/// In-process dispatch.
RunResult run_forge(std::initializer_list<std::string> args);
RunResult run_forge(const std::vector<std::string>& args);

/// The built binary, through the shell; returns the exit status.
int run_forge_binary(const std::string& args, const std::filesystem::path& stdout_file = {});

}  // namespace clover::testing
