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

#include "carfn/experiment.hpp"

#include <algorithm>
#include <cstdio>

#include "carfn/csv.hpp"
#include "carfn/error.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

using S = ExperimentShape;

std::vector<CarTree> draw(Rng& rng, std::span<const CarTree> cars,
                          const std::function<bool(const CarTree&)>& keep,
                          const std::vector<CarTree>& exclude, std::size_t k,
                          const std::string& what) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < cars.size(); ++i) {
    if (keep(cars[i]) &&
        std::find(exclude.begin(), exclude.end(), cars[i]) == exclude.end()) {
      candidates.push_back(i);
    }
  }
  if (candidates.size() < k) {
    throw ExhaustedPoolError("protocol: not enough " + what + " cars", candidates.size());
  }
  std::vector<CarTree> out;
  for (auto i : rng.sample_indices(candidates.size(), k)) out.push_back(cars[candidates[i]]);
  return out;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

std::string log_condition(const Query& q) {
  if (is_composed(q.condition)) return std::string(tag_name(q.condition));
  return "single:" + q.handles.front();
}

ConditionTag single_tag(const FunctionDef& f, const CarTree& input) {
  return is_valid_input(f, input) ? ConditionTag::kSingleValid
                                  : ConditionTag::kSingleInvalid;
}

// Builds the two-function episode for one participant. `answers` maps a
// probe (by position in protocol.probes) to the participant's generation;
// empty means oracle targets.
Episode build_episode(const Grammar& g, const ExperimentProtocol& p, Family family,
                      const std::string& participant,
                      const std::vector<Query>& probes_for_participant) {
  const std::string first = family == Family::kFeeding ? "fA" : "fC";
  Episode e;
  e.provenance = Provenance::kHuman;
  e.family = family;
  e.seed = p.seed;
  e.group = participant;
  e.id = "H-" + p.id + "-" + participant + (family == Family::kFeeding ? "-FCF" : "-BLCBL");
  e.functions = {p.function(first), p.function("fB")};
  for (const auto& s : p.training) {
    if (s.handle == first || s.handle == "fB") e.supports.push_back(s);
  }
  const ConditionTag forward =
      family == Family::kFeeding ? ConditionTag::kFeeding : ConditionTag::kBleeding;
  const ConditionTag backward = family == Family::kFeeding ? ConditionTag::kCounterFeeding
                                                           : ConditionTag::kCounterBleeding;
  for (const std::string& h : {first, std::string("fB")}) {
    for (const auto& q : probes_for_participant) {
      if (!is_composed(q.condition) && q.handles.front() == h) e.queries.push_back(q);
    }
  }
  for (ConditionTag t : {forward, backward}) {
    for (const auto& q : probes_for_participant) {
      if (q.condition == t) e.queries.push_back(q);
    }
  }
  for (std::size_t i = 0; i < e.queries.size(); ++i) e.queries[i].id = numbered("q", i);
  (void)g;
  return e;
}

CarTree perturb(const Grammar& g, Rng& rng, const std::vector<FunctionDef>& fs,
                const CarTree& input, const CarTree& expected, const SurrogateModel& m) {
  auto feature_mismatch = [&]() -> CarTree {
    std::vector<PartKind> free;
    for (PartKind k : g.parts) {
      if (std::none_of(fs.begin(), fs.end(), [k](const auto& f) { return f.target() == k; })) {
        free.push_back(k);
      }
    }
    if (free.empty()) {
      // No untouched part: any other car.
      CarTree c = expected;
      while (c == expected) c = car_at(g, rng.below(g.car_count()));
      return c;
    }
    const PartKind k = free[rng.below(free.size())];
    CarTree c = expected;
    if (const auto& part = c.part(k)) {
      PartSpec s = *part;
      s.color = Color{static_cast<std::uint8_t>(
          (s.color.index + 1 + rng.below(g.num_colors() - 1)) % g.num_colors())};
      c.set(k, s);
    } else {
      c.set(k, g.decode_slot(1 + rng.below(g.slot_states() - 1)));
    }
    return c;
  };

  const std::array<std::uint64_t, 3> weights = {
      static_cast<std::uint64_t>(m.function_mismatch * 1e6),
      static_cast<std::uint64_t>(m.input_copying * 1e6),
      static_cast<std::uint64_t>(m.feature_mismatch * 1e6)};
  const std::size_t kind = fs.size() == 2 ? rng.weighted(weights) : 1 + rng.below(2);
  if (kind == 0) {
    std::vector<CarTree> options;
    for (const CarTree& c : {apply(fs[0], input), apply(fs[1], input),
                             compose(fs[1], fs[0], input)}) {
      if (c != expected && c != input &&
          std::find(options.begin(), options.end(), c) == options.end()) {
        options.push_back(c);
      }
    }
    if (!options.empty()) return options[rng.below(options.size())];
  } else if (kind == 1 && input != expected) {
    return input;
  }
  return feature_mismatch();
}

}  // namespace

const FunctionDef& ExperimentProtocol::function(std::string_view handle) const {
  for (const FunctionDef* f : {&triplet.a, &triplet.b, &triplet.c}) {
    if (f->handle == handle) return *f;
  }
  throw Error("protocol " + id + ": unknown handle '" + std::string(handle) + "'");
}

ExperimentProtocol make_protocol(const Grammar&, std::span<const CarTree> cars,
                                 FunctionTriplet triplet, std::uint64_t seed,
                                 std::string id) {
  ExperimentProtocol p;
  p.id = std::move(id);
  p.seed = seed;
  triplet.a.handle = "fA";
  triplet.b.handle = "fB";
  triplet.c.handle = "fC";
  p.triplet = triplet;
  Rng rng(seed);

  for (const FunctionDef* f : {&p.triplet.a, &p.triplet.b, &p.triplet.c}) {
    auto valid = [f](const CarTree& c) { return is_effective_input(*f, c); };
    auto invalid = [f](const CarTree& c) { return !is_valid_input(*f, c); };
    const auto tv = draw(rng, cars, valid, {}, S::kValidTraining, "valid training");
    const auto ti = draw(rng, cars, invalid, {}, S::kInvalidTraining, "invalid training");
    std::vector<SupportExample> training;
    for (const auto& c : tv) training.push_back({c, f->handle, apply(*f, c), true});
    for (const auto& c : ti) training.push_back({c, f->handle, c, false});
    rng.shuffle(training);
    p.training.insert(p.training.end(), training.begin(), training.end());

    std::vector<CarTree> seen = tv;
    seen.insert(seen.end(), ti.begin(), ti.end());
    const CarTree familiar = tv.front();
    const CarTree novel = draw(rng, cars, valid, seen, 1, "novel").front();
    const CarTree identity = draw(rng, cars, invalid, seen, 1, "identity").front();
    for (const CarTree& c : {familiar, novel, identity}) {
      p.probes.push_back({"", c, {f->handle}, apply(*f, c), single_tag(*f, c)});
    }
  }

  auto add_composed = [&](const FunctionDef& first, const FunctionDef& second,
                          Relation rel, ConditionTag fwd, ConditionTag bwd) {
    auto wit = [&](const CarTree& c) { return witnesses(rel, first, second, c); };
    const auto inputs = draw(rng, cars, wit, {}, 2 * S::kComposedPerCondition, "witness");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const bool forward = i < S::kComposedPerCondition;
      const auto& x = forward ? first : second;
      const auto& y = forward ? second : first;
      p.probes.push_back({"", inputs[i], {x.handle, y.handle}, compose(x, y, inputs[i]),
                          forward ? fwd : bwd});
    }
  };
  add_composed(p.triplet.a, p.triplet.b, Relation::kFeeds, ConditionTag::kFeeding,
               ConditionTag::kCounterFeeding);
  add_composed(p.triplet.c, p.triplet.b, Relation::kBleeds, ConditionTag::kBleeding,
               ConditionTag::kCounterBleeding);
  for (std::size_t i = 0; i < p.probes.size(); ++i) p.probes[i].id = numbered("p", i);
  return p;
}

std::vector<ExperimentProtocol> make_experiment(const Grammar& g,
                                                std::span<const CarTree> cars,
                                                const InteractionIndex& index,
                                                std::uint64_t seed, std::size_t count,
                                                const TripletFilter& filter) {
  if (count > 0 && index.triplet_count(filter) < count) {
    throw ExhaustedPoolError("pool admits fewer than " + std::to_string(count) +
                                 " distinct triplets",
                             index.triplet_count(filter));
  }
  Rng rng(derive_seed(seed, "triplets"));
  std::vector<FunctionTriplet> chosen;
  while (chosen.size() < count) {
    FunctionTriplet t = index.sample_triplet(rng, filter);
    const bool dup = std::any_of(chosen.begin(), chosen.end(), [&](const auto& o) {
      return same_rule(o.a, t.a) && same_rule(o.b, t.b) && same_rule(o.c, t.c);
    });
    if (!dup) chosen.push_back(t);
  }
  std::vector<ExperimentProtocol> out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.push_back(make_protocol(g, cars, chosen[i], derive_seed(seed, "protocol", i),
                                "T" + std::to_string(i)));
  }
  return out;
}

std::vector<FunctionDef> experiment_functions(std::span<const ExperimentProtocol> ps) {
  std::vector<FunctionDef> out;
  for (const auto& p : ps) {
    for (const auto& f : p.functions()) {
      if (std::none_of(out.begin(), out.end(), [&](const auto& o) { return same_rule(o, f); })) {
        out.push_back(f);
      }
    }
  }
  return out;
}

nlohmann::json protocol_to_json(const Grammar& g, const ExperimentProtocol& p) {
  Episode carrier;
  carrier.id = p.id;
  carrier.functions = p.functions();
  carrier.supports = p.training;
  carrier.queries = p.probes;
  carrier.seed = p.seed;
  carrier.provenance = Provenance::kHuman;
  nlohmann::json j = episode_to_json(g, carrier);
  j.erase("family");
  j.erase("provenance");
  j["record"] = "protocol";
  j["training"] = j["supports"];
  j["probes"] = j["queries"];
  j.erase("supports");
  j.erase("queries");
  return j;
}

ExperimentProtocol protocol_from_json(const Grammar& g, const nlohmann::json& j) {
  nlohmann::json e = j;
  e["family"] = "F/CF";
  e["provenance"] = "H";
  e["supports"] = j.at("training");
  e["queries"] = j.at("probes");
  const Episode carrier = episode_from_json(g, e);
  ExperimentProtocol p;
  p.id = carrier.id;
  p.seed = carrier.seed;
  p.triplet = {carrier.function("fA"), carrier.function("fB"), carrier.function("fC")};
  p.training = carrier.supports;
  p.probes = carrier.queries;
  return p;
}

// ---- trial logs -----------------------------------------------------------

std::string trial_log_to_csv(const Grammar& g, std::span<const TrialRow> rows) {
  std::string out = "participant_id,triplet_id,condition,input_car,produced_car\n";
  for (const auto& r : rows) {
    out += csv_field(r.participant_id) + "," + csv_field(r.triplet_id) + "," +
           csv_field(r.condition) + "," + csv_field(car_to_json(g, r.input).dump()) + "," +
           csv_field(car_to_json(g, r.produced).dump()) + "\n";
  }
  return out;
}

std::vector<TrialRow> trial_log_from_csv(const Grammar& g, std::string_view text) {
  const auto rows = parse_csv(text);
  const std::vector<std::string> header = {"participant_id", "triplet_id", "condition",
                                           "input_car", "produced_car"};
  if (rows.empty() || rows.front() != header) {
    throw MalformedInputError("trial log header must be " +
                                  std::string("participant_id,triplet_id,condition,"
                                              "input_car,produced_car"),
                              0);
  }
  std::vector<TrialRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size()) {
      throw MalformedInputError("expected 5 columns, got " + std::to_string(r.size()), i - 1);
    }
    try {
      out.push_back({r[0], r[1], r[2], car_from_json(g, nlohmann::json::parse(r[3])),
                     car_from_json(g, nlohmann::json::parse(r[4]))});
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInputError(std::string("bad car JSON: ") + e.what(), i - 1);
    } catch (const Error& e) {
      throw MalformedInputError(e.what(), i - 1);
    }
  }
  return out;
}

std::vector<TrialRow> make_surrogate_log(const Grammar& g,
                                         std::span<const ExperimentProtocol> protocols,
                                         std::size_t participants, std::uint64_t seed,
                                         const SurrogateModel& model) {
  if (protocols.empty()) throw Error("make_surrogate_log: no protocols");
  std::vector<TrialRow> rows;
  Rng assign(derive_seed(seed, "assign"));
  for (std::size_t i = 0; i < participants; ++i) {
    char pid[32];
    std::snprintf(pid, sizeof pid, "P%03zu", i);
    const auto& p = protocols[assign.below(protocols.size())];
    Rng rng(derive_seed(seed, "participant", i));
    for (const auto& q : p.probes) {
      std::vector<FunctionDef> fs;
      for (const auto& h : q.handles) fs.push_back(p.function(h));
      const double acc = model.accuracy.count(q.condition) ? model.accuracy.at(q.condition) : 1.0;
      CarTree produced = q.target;
      if (!rng.bernoulli(acc)) produced = perturb(g, rng, fs, q.input, q.target, model);
      rows.push_back({pid, p.id, log_condition(q), q.input, produced});
    }
  }
  return rows;
}

std::vector<Episode> gen_experiment_episodes(const Grammar& g,
                                             const ExperimentProtocol& protocol,
                                             const std::vector<TrialRow>* log) {
  std::vector<Episode> out;
  if (!log) {
    for (Family fam : {Family::kFeeding, Family::kBleeding}) {
      out.push_back(build_episode(g, protocol, fam, "surrogate", protocol.probes));
    }
    return out;
  }

  // Participants of this protocol in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < log->size(); ++i) {
    const auto& r = (*log)[i];
    if (r.triplet_id != protocol.id) continue;
    if (!rows_of.count(r.participant_id)) order.push_back(r.participant_id);
    rows_of[r.participant_id].push_back(i);
  }

  for (const auto& pid : order) {
    std::vector<Query> answers;
    std::map<std::string, std::size_t> counts;
    for (std::size_t idx : rows_of[pid]) {
      const auto& r = (*log)[idx];
      Query q;
      q.input = r.input;
      q.target = r.produced;
      q.human = true;
      if (r.condition.rfind("single:", 0) == 0) {
        const std::string h = r.condition.substr(7);
        if (h != "fA" && h != "fB" && h != "fC") {
          throw MalformedInputError("unknown handle in condition '" + r.condition + "'", idx);
        }
        q.handles = {h};
        q.condition = single_tag(protocol.function(h), r.input);
      } else {
        const auto tag = tag_from_name(r.condition);
        if (!tag || !is_composed(*tag)) {
          throw MalformedInputError("unknown condition '" + r.condition + "'", idx);
        }
        q.condition = *tag;
        switch (*tag) {
          case ConditionTag::kFeeding: q.handles = {"fA", "fB"}; break;
          case ConditionTag::kCounterFeeding: q.handles = {"fB", "fA"}; break;
          case ConditionTag::kBleeding: q.handles = {"fC", "fB"}; break;
          default: q.handles = {"fB", "fC"}; break;
        }
      }
      const std::size_t limit = q.handles.size() == 1 ? S::kSinglesPerFunction
                                                      : S::kComposedPerCondition;
      if (++counts[r.condition] > limit) {
        throw MalformedInputError("participant " + pid + " has more than " +
                                      std::to_string(limit) + " '" + r.condition + "' trials",
                                  idx);
      }
      answers.push_back(std::move(q));
    }
    for (const std::string c : {"single:fA", "single:fB", "single:fC", "F", "CF", "BL", "CBL"}) {
      const std::size_t want =
          c.rfind("single:", 0) == 0 ? S::kSinglesPerFunction : S::kComposedPerCondition;
      if (counts[c] != want) {
        throw MalformedInputError("participant " + pid + " has " + std::to_string(counts[c]) +
                                      " '" + c + "' trials, expected " + std::to_string(want),
                                  rows_of[pid].back());
      }
    }
    for (Family fam : {Family::kFeeding, Family::kBleeding}) {
      out.push_back(build_episode(g, protocol, fam, pid, answers));
    }
  }
  return out;
}

Corpus gen_experiment_corpus(const Grammar& g, std::span<const ExperimentProtocol> protocols,
                             const std::vector<TrialRow>* log, const CorpusSplit& split,
                             std::uint64_t seed, Quantifier q) {
  Corpus c;
  c.header.provenance = Provenance::kHuman;
  c.header.seed = seed;
  c.header.quantifier = q;
  c.header.grammar = g;
  c.header.split = split;
  if (log) {
    for (std::size_t i = 0; i < log->size(); ++i) {
      const auto& id = (*log)[i].triplet_id;
      if (std::none_of(protocols.begin(), protocols.end(),
                       [&](const auto& p) { return p.id == id; })) {
        throw MalformedInputError("unknown triplet '" + id + "'", i);
      }
    }
  }
  for (const auto& p : protocols) {
    auto eps = gen_experiment_episodes(g, p, log);
    c.episodes.insert(c.episodes.end(), eps.begin(), eps.end());
  }
  c.header.count = c.episodes.size();
  return c;
}

}  // namespace carfn
