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

#include "carfn/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "carfn/audit.hpp"
#include "carfn/error.hpp"
#include "carfn/metrics.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::error_code ec;
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(path, "write failed");
}

namespace {

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void write_resolved_config(const RunConfig& c) {
  write_text_file(out_path(c, "config.resolved.json"), config_to_json(c).dump(2) + "\n");
}

// Maps engine errors onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

std::vector<TrialRow> rows_for(const std::vector<TrialRow>& all,
                               std::span<const ExperimentProtocol> ps) {
  std::vector<TrialRow> out;
  for (const auto& r : all) {
    if (std::any_of(ps.begin(), ps.end(), [&](const auto& p) { return p.id == r.triplet_id; })) {
      out.push_back(r);
    }
  }
  return out;
}

int report_audit(const AuditReport& r, const std::string& label, std::ostream& out,
                 std::ostream& err) {
  if (r.ok()) {
    out << label << ": " << r.episodes << " episodes, audit ok\n";
    return kExitOk;
  }
  err << label << ": audit found " << r.violations.size() << " violations\n";
  for (std::size_t i = 0; i < r.violations.size() && i < 10; ++i) {
    err << "  " << r.violations[i] << "\n";
  }
  return kExitAudit;
}

TokenSeq tokens_field(const nlohmann::json& v) {
  if (v.is_string()) return split_tokens(v.get<std::string>());
  return v.get<TokenSeq>();
}

}  // namespace

std::span<const ExperimentProtocol> Pipeline::h_protocols(const RunConfig& c) const {
  return std::span(experiment).first(std::min(c.h_triplets, experiment.size()));
}

std::span<const ExperimentProtocol> Pipeline::heldout_protocols(const RunConfig& c) const {
  return std::span(experiment).subspan(std::min(c.h_triplets, experiment.size()));
}

Pipeline build_pipeline(const RunConfig& c) {
  const Grammar& g = c.grammar;
  Pipeline p;
  p.pool = enumerate_functions(g);
  const auto cars = enumerate_cars(g);
  const InteractionIndex index(g, p.pool, c.quantifier, c.workers);
  p.experiment = make_experiment(g, cars, index, derive_seed(c.seed, "experiment"), c.triplets);
  p.split = split_functions(c.resolved_split_seed(), p.pool, experiment_functions(p.experiment),
                            c.val_fraction);
  return p;
}

Corpus compile_distribution(const RunConfig& c, const Pipeline& p, std::string_view name,
                            std::vector<TrialRow>* log_out) {
  const Grammar& g = c.grammar;
  if (name == "base") {
    return gen_base_corpus(g, derive_seed(c.seed, "base"), p.split, c.base_n,
                           Provenance::kBaseTrain, c.quantifier, c.workers);
  }
  if (name == "val") {
    return gen_base_corpus(g, derive_seed(c.seed, "val"), p.split, c.val_n,
                           Provenance::kBaseVal, c.quantifier, c.workers);
  }
  if (name == "S") {
    // Same seed as base.
    return gen_noisy_corpus(g, derive_seed(c.seed, "base"), p.split, c.s_n, c.noise.p_flip,
                            c.quantifier, c.workers);
  }
  if (name == "H" || name == "heldout") {
    const bool h = name == "H";
    const auto protocols = h ? p.h_protocols(c) : p.heldout_protocols(c);
    std::vector<TrialRow> log;
    if (!c.trial_log.empty()) {
      log = rows_for(trial_log_from_csv(g, read_text_file(c.trial_log)), protocols);
    } else if (!protocols.empty()) {
      log = make_surrogate_log(g, protocols, c.h_participants,
                               derive_seed(c.seed, h ? "surrogate" : "surrogate-heldout"));
    }
    if (log_out) *log_out = log;
    return gen_experiment_corpus(g, protocols, &log, p.split,
                                 derive_seed(c.seed, std::string(name)), c.quantifier);
  }
  throw ConfigError("unknown distribution '" + std::string(name) + "'");
}

std::vector<GenerationRecord> resolve_generations(const Corpus& corpus, std::string_view jsonl) {
  const Grammar& g = corpus.header.grammar;
  std::map<std::string, const Episode*> episodes;
  for (const auto& e : corpus.episodes) episodes[e.id] = &e;
  std::vector<GenerationRecord> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t i = index++;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedInputError(e.what(), i);
    }
    try {
      const auto eid = j.at("episode_id").get<std::string>();
      const auto qid = j.at("query_id").get<std::string>();
      auto eit = episodes.find(eid);
      if (eit == episodes.end()) throw MalformedInputError("unknown episode '" + eid + "'", i);
      const Episode& e = *eit->second;
      auto qit = std::find_if(e.queries.begin(), e.queries.end(),
                              [&](const Query& q) { return q.id == qid; });
      if (qit == e.queries.end()) {
        throw MalformedInputError("unknown query '" + qid + "' in episode '" + eid + "'", i);
      }
      std::optional<CarTree> produced;
      TokenSeq tokens = tokens_field(j.at("produced"));
      try {
        produced = parse_car(g, tokens);
      } catch (const ParseError&) {
        produced.reset();
      }
      const std::string group =
          j.contains("group") ? j.at("group").get<std::string>()
                              : (e.group.empty() ? e.id : e.group);
      auto rec = make_record(group, qit->condition, qit->input, e.resolve(qit->handles),
                             produced);
      rec.episode_id = eid;
      rec.query_id = qid;
      rec.produced_tokens = std::move(tokens);
      if (j.contains("token_logprobs")) {
        rec.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
      }
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInputError(e.what(), i);
    }
  }
  return out;
}

std::vector<GenerationRecord> records_from_targets(const Corpus& corpus) {
  std::vector<GenerationRecord> out;
  for (const auto& e : corpus.episodes) {
    for (const auto& q : e.queries) {
      auto rec = make_record(e.group.empty() ? e.id : e.group, q.condition, q.input,
                             e.resolve(q.handles), q.target);
      rec.episode_id = e.id;
      rec.query_id = q.id;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

nlohmann::json generation_to_json(const Grammar& g, const GenerationRecord& r) {
  nlohmann::json j = {{"episode_id", r.episode_id}, {"query_id", r.query_id}, {"group", r.group}};
  if (r.produced_tokens) {
    j["produced"] = join_tokens(*r.produced_tokens);
  } else if (r.produced) {
    j["produced"] = join_tokens(serialize_car(g, *r.produced));
  } else {
    j["produced"] = "";
  }
  if (r.token_logprobs) j["token_logprobs"] = *r.token_logprobs;
  return j;
}

int cmd_enumerate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Grammar& g = c.grammar;
    const auto cars = enumerate_cars(g);
    std::map<std::string, std::uint64_t> by_parts;
    for (const auto& car : cars) ++by_parts[std::to_string(car.part_count())];
    std::uint64_t closed = 1;
    for (std::size_t i = 0; i < g.parts.size(); ++i) closed *= g.slot_states();
    nlohmann::json car_census = {{"car_count", cars.size()},
                                 {"closed_form", closed},
                                 {"slot_states", g.slot_states()},
                                 {"by_part_count", by_parts}};

    const auto fns = enumerate_functions(g);
    nlohmann::json kinds = nlohmann::json::object();
    for (const auto& [k, n] : count_by_kind(fns)) kinds[std::string(transform_name(k))] = n;
    std::map<std::string, std::size_t> by_part;
    for (const auto& f : fns) ++by_part[std::string(part_name(f.target()))];
    nlohmann::json fn_census = {{"function_count", fns.size()},
                                {"by_kind", kinds},
                                {"by_part", by_part}};

    write_text_file(out_path(c, "cars.census.json"), car_census.dump(2) + "\n");
    write_text_file(out_path(c, "functions.census.json"), fn_census.dump(2) + "\n");
    write_text_file(out_path(c, "functions.txt"), format_function_file(g, fns));
    write_text_file(out_path(c, "vocab.txt"), Vocabulary(g).to_text());
    write_resolved_config(c);
    out << "cars: " << cars.size() << "\nfunctions: " << fns.size() << "\n";
    return kExitOk;
  });
}

int cmd_classify(const RunConfig& c, const ClassifyArgs& a, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const Grammar& g = c.grammar;
    const int modes = (a.f || a.g ? 1 : 0) + (a.functions_path ? 1 : 0) + (a.all ? 1 : 0);
    if (modes != 1) throw ConfigError("classify: give --f and --g, --functions, or --all");
    std::vector<InteractionRow> rows;
    if (a.f || a.g) {
      if (!a.f || !a.g) throw ConfigError("classify: --f and --g go together");
      auto f = parse_function(g, *a.f);
      auto h = parse_function(g, *a.g);
      f.handle = "f";
      h.handle = "g";
      const auto label = classify_pair(g, f, h, c.quantifier);
      rows.push_back({f.handle, h.handle, summarize_pair(g, f, h)});
      out << "relation (" << quantifier_name(c.quantifier)
          << "): " << relation_name(label.relation) << "\n";
      out << "witnesses: " << label.witness_count << "\n";
    } else {
      const auto pool =
          a.all ? enumerate_functions(g) : parse_function_file(g, read_text_file(*a.functions_path));
      const InteractionIndex index(g, pool, c.quantifier, c.workers);
      rows.reserve(pool.size() * pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = 0; j < pool.size(); ++j) {
          rows.push_back({pool[i].handle, pool[j].handle, index.summary(i, j)});
        }
      }
      out << "pairs: " << rows.size() << "\n";
    }
    std::ostringstream csv;
    write_interaction_csv(csv, rows);
    write_text_file(out_path(c, "interactions.csv"), csv.str());
    write_resolved_config(c);
    return kExitOk;
  });
}

int cmd_compile(const RunConfig& c, const CompileArgs& a, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const Grammar& g = c.grammar;
    const auto names = a.distributions.empty() ? kDistributions : a.distributions;
    for (const auto& n : names) {
      if (std::find(kDistributions.begin(), kDistributions.end(), n) == kDistributions.end()) {
        throw ConfigError("unknown distribution '" + n + "'");
      }
    }
    const Pipeline p = build_pipeline(c);
    write_text_file(out_path(c, "split.json"), split_to_json(g, p.split).dump(2) + "\n");
    std::string protocols;
    for (const auto& pr : p.experiment) protocols += protocol_to_json(g, pr).dump() + "\n";
    write_text_file(out_path(c, "experiment.jsonl"), protocols);
    write_text_file(out_path(c, "vocab.txt"), Vocabulary(g).to_text());

    int code = kExitOk;
    for (const auto& n : names) {
      std::vector<TrialRow> log;
      const Corpus corpus = compile_distribution(c, p, n, &log);
      write_corpus(out_path(c, n + ".jsonl"), corpus);
      if ((n == "H" || n == "heldout") && c.trial_log.empty()) {
        write_text_file(out_path(c, n + ".trials.csv"), trial_log_to_csv(g, log));
      }
      if (a.encode) {
        std::ostringstream enc;
        write_encoded(enc, g, Vocabulary(g), corpus);
        write_text_file(out_path(c, n + ".encoded.jsonl"), enc.str());
      }
      const auto report = audit_corpus(corpus);
      write_text_file(out_path(c, n + ".audit.json"), audit_to_json(report).dump(2) + "\n");
      code = std::max(code, report_audit(report, n, out, err));
    }
    write_resolved_config(c);
    return code;
  });
}

int cmd_score(const RunConfig& c, const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.targets == a.generations_path.has_value()) {
      throw ConfigError("score: give exactly one of --generations or --targets");
    }
    const Corpus corpus = read_corpus(a.corpus_path);
    const auto records = a.targets
                             ? records_from_targets(corpus)
                             : resolve_generations(corpus, read_text_file(*a.generations_path));
    const auto report = score_generations(records);
    const std::string table = format_metrics_table({{a.name, report}});
    const std::string errors = format_error_table(report);
    write_text_file(out_path(c, "metrics.json"), metrics_to_json(report).dump(2) + "\n");
    write_text_file(out_path(c, "metrics.txt"), table + "\n" + errors);
    write_resolved_config(c);
    out << table;
    return kExitOk;
  });
}

int cmd_audit(const RunConfig& c, const std::string& corpus_path, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const Corpus corpus = read_corpus(corpus_path);
    const auto report = audit_corpus(corpus);
    write_text_file(out_path(c, "audit.json"), audit_to_json(report).dump(2) + "\n");
    write_resolved_config(c);
    return report_audit(report, corpus_path, out, err);
  });
}

}  // namespace carfn
