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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "carfn/commands.hpp"
#include "carfn/error.hpp"
#include "carfn/metrics.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace carfn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("carfn-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

RunConfig small_config(const TempDir& dir) {
  RunConfig c;
  c.seed = 21;
  c.base_n = 100;
  c.val_n = 10;
  c.s_n = 100;
  c.h_participants = 3;
  c.triplets = 4;
  c.h_triplets = 2;
  c.out = dir.path.string();
  return c;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

template <typename F>
Run run(F&& f) {
  std::ostringstream out, err;
  Run r;
  r.code = f(out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("config file form") {
  RunConfig c;
  c.seed = 99;
  c.split_seed = 4;
  c.noise.p_flip = 0.25;
  c.quantifier = Quantifier::kExistential;
  const auto j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)) == j);

  const auto parsed = config_from_text(R"({
    // root seed
    "seed": 5,
    /* nested */ "noise": {"p_flip": 0.0},
    "sizes": {"base_n": 10}
  })");
  CHECK(parsed.seed == 5);
  CHECK(parsed.noise.p_flip == 0.0);
  CHECK(parsed.base_n == 10);
  CHECK(parsed.s_n == RunConfig{}.s_n);

  CHECK_THROWS_AS(config_from_text(R"({"sede": 1})"), ConfigError);
  CHECK_THROWS_AS(config_from_text(R"({"noise": {"p_flip": 2}})"), ConfigError);
  CHECK_THROWS_AS(config_from_text(R"({"quantifier": "some"})"), ConfigError);
  CHECK_THROWS_AS(config_from_text("{"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/carfn.json"), IoError);
}

TEST_CASE("enumerate") {
  TempDir dir("enum");
  const auto c = small_config(dir);
  const auto r = run([&](auto& o, auto& e) { return cmd_enumerate(c, o, e); });
  REQUIRE(r.code == kExitOk);
  const auto cars = nlohmann::json::parse(read_text_file(dir.file("cars.census.json")));
  CHECK(cars["car_count"] == 10648);
  CHECK(cars["closed_form"] == 10648);
  const auto fns = nlohmann::json::parse(read_text_file(dir.file("functions.census.json")));
  std::size_t sum = 0;
  for (const auto& [k, v] : fns["by_kind"].items()) sum += v.get<std::size_t>();
  CHECK(sum == fns["function_count"].get<std::size_t>());
  CHECK(fs::exists(dir.file("config.resolved.json")));

  const auto before = read_text_file(dir.file("functions.txt"));
  REQUIRE(run([&](auto& o, auto& e) { return cmd_enumerate(c, o, e); }).code == kExitOk);
  CHECK(read_text_file(dir.file("functions.txt")) == before);
}

TEST_CASE("classify") {
  TempDir dir("classify");
  const auto c = small_config(dir);
  ClassifyArgs a;
  a.f = fixtures::kAddWindow;
  a.g = fixtures::kPaintGreen;
  auto r = run([&](auto& o, auto& e) { return cmd_classify(c, a, o, e); });
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("feeds") != std::string::npos);
  CHECK(read_text_file(dir.file("interactions.csv")).find("f,g,feeds,feeds,") != std::string::npos);

  a.g = fixtures::kAddWindow;
  r = run([&](auto& o, auto& e) { return cmd_classify(c, a, o, e); });
  CHECK(r.out.find("none") != std::string::npos);

  a.g = "ADD WINDOW T1 NONE IF WINDOW ABSNT";
  r = run([&](auto& o, auto& e) { return cmd_classify(c, a, o, e); });
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("1:30") != std::string::npos);

  write_text_file(dir.file("fns.txt"), std::string(fixtures::kAddWindow) + "\n" +
                                           fixtures::kPaintGreen + "\n" +
                                           fixtures::kRemoveWindow + "\n");
  ClassifyArgs file;
  file.functions_path = dir.file("fns.txt");
  REQUIRE(run([&](auto& o, auto& e) { return cmd_classify(c, file, o, e); }).code == kExitOk);
  const auto csv = read_text_file(dir.file("interactions.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9);

  RunConfig tiny = c;
  tiny.grammar.parts = {PartKind::kWindow};
  tiny.grammar.num_types = 2;
  tiny.grammar.colors = {"NONE", "GREEN"};
  ClassifyArgs all;
  all.all = true;
  REQUIRE(run([&](auto& o, auto& e) { return cmd_classify(tiny, all, o, e); }).code == kExitOk);
  const std::size_t P = enumerate_functions(tiny.grammar).size();
  const auto all_csv = read_text_file(dir.file("interactions.csv"));
  CHECK(static_cast<std::size_t>(std::count(all_csv.begin(), all_csv.end(), '\n')) == 1 + P * P);

  ClassifyArgs none;
  CHECK(run([&](auto& o, auto& e) { return cmd_classify(c, none, o, e); }).code == kExitUsage);
}

TEST_CASE("compile, audit and score") {
  TempDir dir("compile");
  auto c = small_config(dir);
  c.noise.p_flip = 0.0;
  CompileArgs args;
  args.encode = true;
  const auto r = run([&](auto& o, auto& e) { return cmd_compile(c, args, o, e); });
  INFO(r.err);
  REQUIRE(r.code == kExitOk);

  const Corpus base = read_corpus(dir.file("base.jsonl"));
  std::map<Family, int> fams;
  for (const auto& e : base.episodes) ++fams[e.family];
  CHECK(fams[Family::kFeeding] == 50);
  CHECK(fams[Family::kBleeding] == 50);
  CHECK(read_text_file(dir.file("S.jsonl")) == read_text_file(dir.file("base.jsonl")));

  const Corpus h = read_corpus(dir.file("H.jsonl"));
  CHECK(h.episodes.size() == 2 * c.h_participants);
  for (const auto& e : h.episodes) CHECK(e.supports.size() == 18);
  CHECK(fs::exists(dir.file("H.trials.csv")));
  CHECK(fs::exists(dir.file("base.encoded.jsonl")));

  const auto snapshot = read_text_file(dir.file("H.jsonl"));
  REQUIRE(run([&](auto& o, auto& e) { return cmd_compile(c, {{"H"}, false}, o, e); }).code ==
          kExitOk);
  CHECK(read_text_file(dir.file("H.jsonl")) == snapshot);
  CHECK(run([&](auto& o, auto& e) { return cmd_compile(c, {{"X"}, false}, o, e); }).code ==
        kExitUsage);

  // Replaying the trial log as a configured log reproduces the corpus.
  auto replay = c;
  replay.trial_log = dir.file("H.trials.csv");
  REQUIRE(run([&](auto& o, auto& e) { return cmd_compile(replay, {{"H"}, false}, o, e); }).code ==
          kExitOk);
  CHECK(read_text_file(dir.file("H.jsonl")) == snapshot);

  CHECK(run([&](auto& o, auto& e) { return cmd_audit(c, dir.file("val.jsonl"), o, e); }).code ==
        kExitOk);
  Corpus tampered = base;
  tampered.episodes[3].queries[5].target = CarTree{};
  tampered.episodes[3].queries[6].target = CarTree{};
  write_corpus(dir.file("bad.jsonl"), tampered);
  const auto bad = run([&](auto& o, auto& e) { return cmd_audit(c, dir.file("bad.jsonl"), o, e); });
  CHECK(bad.code == kExitAudit);
  CHECK(bad.err.find("base-train-000003") != std::string::npos);
  CHECK(run([&](auto& o, auto& e) { return cmd_audit(c, dir.file("none.jsonl"), o, e); }).code ==
        kExitIo);

  // Oracle-perfect generations.
  std::string gens;
  for (const auto& e : base.episodes) {
    for (const auto& q : e.queries) {
      GenerationRecord g;
      g.episode_id = e.id;
      g.query_id = q.id;
      g.group = e.id;
      g.produced = q.target;
      gens += generation_to_json(c.grammar, g).dump() + "\n";
    }
  }
  write_text_file(dir.file("gens.jsonl"), gens);
  ScoreArgs sa;
  sa.corpus_path = dir.file("base.jsonl");
  sa.generations_path = dir.file("gens.jsonl");
  REQUIRE(run([&](auto& o, auto& e) { return cmd_score(c, sa, o, e); }).code == kExitOk);
  const auto metrics = nlohmann::json::parse(read_text_file(dir.file("metrics.json")));
  CHECK(metrics["overall"]["accuracy"] == 1.0);
  CHECK(fs::exists(dir.file("metrics.txt")));

  write_text_file(dir.file("dangling.jsonl"),
                  gens + R"({"episode_id":"base-train-000001","query_id":"q99","produced":"CAR"})" +
                      "\n");
  sa.generations_path = dir.file("dangling.jsonl");
  const auto dang = run([&](auto& o, auto& e) { return cmd_score(c, sa, o, e); });
  CHECK(dang.code == kExitUsage);
  CHECK(dang.err.find("q99") != std::string::npos);
  CHECK(dang.err.find("record 1200") != std::string::npos);

  ScoreArgs human;
  human.corpus_path = dir.file("H.jsonl");
  human.targets = true;
  const auto hr = run([&](auto& o, auto& e) { return cmd_score(c, human, o, e); });
  CHECK(hr.code == kExitOk);
  CHECK(hr.out.find("Overall") != std::string::npos);
}

TEST_CASE("malformed generations score as other") {
  TempDir dir("malformed");
  const auto c = small_config(dir);
  RunConfig small = c;
  REQUIRE(run([&](auto& o, auto& e) { return cmd_compile(small, {{"val"}, false}, o, e); }).code ==
          kExitOk);
  const Corpus val = read_corpus(dir.file("val.jsonl"));
  const auto& e = val.episodes.front();
  const std::string line = nlohmann::json{{"episode_id", e.id},
                                          {"query_id", e.queries[0].id},
                                          {"produced", "CAR ( WINDOW"}}
                               .dump();
  const auto recs = resolve_generations(val, line + "\n");
  REQUIRE(recs.size() == 1);
  CHECK_FALSE(recs[0].produced.has_value());
  CHECK(classify_error(recs[0]).kind == ErrorKind::kOther);
}
