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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carfn/commands.hpp"
#include "carfn/error.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> quantifier;
};

carfn::RunConfig resolve_config(const GlobalFlags& f) {
  carfn::RunConfig c = f.config_path.empty() ? carfn::RunConfig{}
                                             : carfn::load_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.workers) c.workers = *f.workers;
  if (f.quantifier) {
    auto q = carfn::quantifier_from_name(*f.quantifier);
    if (!q) throw carfn::ConfigError("unknown quantifier '" + *f.quantifier + "'");
    c.quantifier = *q;
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carfn: car-function composition engine"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file (comments allowed)");
  app.add_option("--seed", flags.seed, "Root seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--workers", flags.workers, "Worker threads");
  app.add_option("--quantifier", flags.quantifier, "existential or universal")
      ->check(CLI::IsMember({"existential", "universal"}));

  auto* enumerate = app.add_subcommand("enumerate", "Write car and function census files");

  carfn::ClassifyArgs classify_args;
  auto* classify = app.add_subcommand("classify", "Classify function pairs");
  classify->add_option("--f", classify_args.f, "First function (DSL)");
  classify->add_option("--g", classify_args.g, "Second function (DSL)");
  classify->add_option("--functions", classify_args.functions_path, "Function file");
  classify->add_flag("--all", classify_args.all, "Every ordered pair of the full pool");

  carfn::CompileArgs compile_args;
  auto* compile = app.add_subcommand("compile", "Compile and audit corpora");
  compile->add_option("distributions", compile_args.distributions,
                      "base, val, S, H, heldout (default: all)");
  compile->add_flag("--encode", compile_args.encode, "Also write encoded records");

  carfn::ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score generations against a corpus");
  score->add_option("--corpus", score_args.corpus_path, "Corpus JSONL")->required();
  score->add_option("--generations", score_args.generations_path, "Generations JSONL");
  score->add_flag("--targets", score_args.targets, "Score the corpus' own query targets");
  score->add_option("--name", score_args.name, "Row label in the table");

  std::string audit_path;
  auto* audit = app.add_subcommand("audit", "Audit a corpus");
  audit->add_option("corpus", audit_path, "Corpus JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? carfn::kExitOk : carfn::kExitUsage;
  }

  carfn::RunConfig config;
  try {
    config = resolve_config(flags);
  } catch (const carfn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return carfn::kExitIo;
  } catch (const carfn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return carfn::kExitUsage;
  }

  if (*enumerate) return carfn::cmd_enumerate(config, std::cout, std::cerr);
  if (*classify) return carfn::cmd_classify(config, classify_args, std::cout, std::cerr);
  if (*compile) return carfn::cmd_compile(config, compile_args, std::cout, std::cerr);
  if (*score) return carfn::cmd_score(config, score_args, std::cout, std::cerr);
  if (*audit) return carfn::cmd_audit(config, audit_path, std::cout, std::cerr);
  return carfn::kExitUsage;
}
