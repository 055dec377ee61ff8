// Copyright 2026 The carfn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carfn/config.hpp"
#include "carfn/episode.hpp"
#include "carfn/experiment.hpp"
#include "carfn/oracle.hpp"

namespace carfn {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitAudit = 2,
  kExitIo = 3,
};

// Everything the compile step derives from a config before sampling corpora.
struct Pipeline {
  std::vector<FunctionDef> pool;
  std::vector<ExperimentProtocol> experiment;
  CorpusSplit split;

  std::span<const ExperimentProtocol> h_protocols(const RunConfig& c) const;
  std::span<const ExperimentProtocol> heldout_protocols(const RunConfig& c) const;
};

Pipeline build_pipeline(const RunConfig& c);

inline const std::vector<std::string> kDistributions = {"base", "val", "S", "H",
                                                        "heldout"};

// Builds one named distribution. H and heldout use the configured trial log,
// or a surrogate log when none is set; `log_out` receives the rows used.
Corpus compile_distribution(const RunConfig& c, const Pipeline& p,
                            std::string_view name,
                            std::vector<TrialRow>* log_out = nullptr);

// One JSON object per line: episode_id, query_id, produced (token string or
// array), optional token_logprobs, optional group. `expected` comes from the
// oracle. Throws MalformedInputError naming the record on dangling
// references.
std::vector<GenerationRecord> resolve_generations(const Corpus& corpus,
                                                  std::string_view jsonl);

// Treats every query target as a generation; for H corpora this scores the
// logged human outputs.
std::vector<GenerationRecord> records_from_targets(const Corpus& corpus);

nlohmann::json generation_to_json(const Grammar& g, const GenerationRecord& r);

struct ClassifyArgs {
  std::optional<std::string> f;
  std::optional<std::string> g;
  std::optional<std::string> functions_path;
  bool all = false;
};

struct CompileArgs {
  std::vector<std::string> distributions;  // empty: all
  bool encode = false;
};

struct ScoreArgs {
  std::string corpus_path;
  std::optional<std::string> generations_path;
  bool targets = false;
  std::string name = "model";
};

// Each command writes into `c.out`, records the resolved config there, and
// returns an ExitCode. Messages go to `out` and `err`.
int cmd_enumerate(const RunConfig& c, std::ostream& out, std::ostream& err);
int cmd_classify(const RunConfig& c, const ClassifyArgs& a, std::ostream& out,
                 std::ostream& err);
int cmd_compile(const RunConfig& c, const CompileArgs& a, std::ostream& out,
                std::ostream& err);
int cmd_score(const RunConfig& c, const ScoreArgs& a, std::ostream& out,
              std::ostream& err);
int cmd_audit(const RunConfig& c, const std::string& corpus_path, std::ostream& out,
              std::ostream& err);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace carfn
