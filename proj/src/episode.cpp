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

#include "carfn/episode.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "carfn/error.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

constexpr std::array<std::string_view, 4> kProvenanceNames = {
    "base-train", "base-val", "H", "S"};

using CarFilter = std::function<bool(const CarTree&)>;

// k distinct cars from `cars` passing `keep`, not in `exclude`.
std::vector<CarTree> draw(Rng& rng, std::span<const CarTree> cars,
                          const CarFilter& keep, const std::vector<CarTree>& exclude,
                          std::size_t k, const std::string& what) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < cars.size(); ++i) {
    if (!keep(cars[i])) continue;
    if (std::find(exclude.begin(), exclude.end(), cars[i]) != exclude.end()) continue;
    candidates.push_back(i);
  }
  if (candidates.size() < k) {
    throw ExhaustedPoolError("not enough " + what + " inputs: need " +
                                 std::to_string(k) + ", have " +
                                 std::to_string(candidates.size()),
                             candidates.size());
  }
  std::vector<CarTree> out;
  for (auto i : rng.sample_indices(candidates.size(), k)) {
    out.push_back(cars[candidates[i]]);
  }
  return out;
}

std::string query_id(std::size_t i) {
  return (i < 10 ? "q0" : "q") + std::to_string(i);
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  return kProvenanceNames[static_cast<std::size_t>(p)];
}

std::optional<Provenance> provenance_from_name(std::string_view s) {
  for (std::size_t i = 0; i < kProvenanceNames.size(); ++i) {
    if (kProvenanceNames[i] == s) return static_cast<Provenance>(i);
  }
  return std::nullopt;
}

std::string_view family_name(Family f) {
  return f == Family::kFeeding ? "F/CF" : "BL/CBL";
}

std::optional<Family> family_from_name(std::string_view s) {
  if (s == "F/CF") return Family::kFeeding;
  if (s == "BL/CBL") return Family::kBleeding;
  return std::nullopt;
}

const FunctionDef& Episode::function(std::string_view handle) const {
  for (const auto& f : functions) {
    if (f.handle == handle) return f;
  }
  throw Error("episode " + id + ": unknown handle '" + std::string(handle) + "'");
}

std::vector<FunctionDef> Episode::resolve(std::span<const std::string> handles) const {
  std::vector<FunctionDef> out;
  for (const auto& h : handles) out.push_back(function(h));
  return out;
}

bool is_effective_input(const FunctionDef& f, const CarTree& car) {
  return is_valid_input(f, car) && apply(f, car) != car;
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json episode_to_json(const Grammar& g, const Episode& e) {
  nlohmann::json functions = nlohmann::json::array();
  for (const auto& f : e.functions) {
    functions.push_back({{"handle", f.handle}, {"function", serialize_function(g, f)}});
  }
  nlohmann::json supports = nlohmann::json::array();
  for (const auto& s : e.supports) {
    supports.push_back({{"input", car_to_json(g, s.input)},
                        {"handle", s.handle},
                        {"output", car_to_json(g, s.output)},
                        {"valid", s.valid}});
  }
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : e.queries) {
    nlohmann::json jq = {{"id", q.id},
                         {"input", car_to_json(g, q.input)},
                         {"handles", q.handles},
                         {"target", car_to_json(g, q.target)},
                         {"condition", tag_name(q.condition)},
                         {"flipped", q.flipped}};
    if (q.human) jq["human"] = true;
    queries.push_back(std::move(jq));
  }
  nlohmann::json j = {{"schema_version", kEpisodeSchemaVersion},
                      {"id", e.id},
                      {"provenance", provenance_name(e.provenance)},
                      {"family", family_name(e.family)},
                      {"functions", functions},
                      {"supports", supports},
                      {"queries", queries},
                      {"seed", e.seed}};
  if (!e.group.empty()) j["group"] = e.group;
  return j;
}

Episode episode_from_json(const Grammar& g, const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kEpisodeSchemaVersion) {
    throw Error("episode: unsupported schema_version");
  }
  Episode e;
  e.id = j.at("id").get<std::string>();
  const auto prov = provenance_from_name(j.at("provenance").get<std::string>());
  if (!prov) throw Error("episode " + e.id + ": unknown provenance");
  e.provenance = *prov;
  const auto fam = family_from_name(j.at("family").get<std::string>());
  if (!fam) throw Error("episode " + e.id + ": unknown family");
  e.family = *fam;
  e.seed = j.at("seed").get<std::uint64_t>();
  e.group = j.value("group", "");
  for (const auto& jf : j.at("functions")) {
    FunctionDef f = parse_function(g, jf.at("function").get<std::string>());
    f.handle = jf.at("handle").get<std::string>();
    e.functions.push_back(std::move(f));
  }
  for (const auto& s : j.at("supports")) {
    e.supports.push_back({car_from_json(g, s.at("input")),
                          s.at("handle").get<std::string>(),
                          car_from_json(g, s.at("output")), s.at("valid").get<bool>()});
  }
  for (const auto& q : j.at("queries")) {
    Query out;
    out.id = q.at("id").get<std::string>();
    out.input = car_from_json(g, q.at("input"));
    out.handles = q.at("handles").get<std::vector<std::string>>();
    out.target = car_from_json(g, q.at("target"));
    const auto tag = tag_from_name(q.at("condition").get<std::string>());
    if (!tag) throw Error("episode " + e.id + ": unknown query condition");
    out.condition = *tag;
    out.flipped = q.value("flipped", false);
    out.human = q.value("human", false);
    e.queries.push_back(std::move(out));
  }
  return e;
}

// ---- split ----------------------------------------------------------------

CorpusSplit split_functions(std::uint64_t seed, const std::vector<FunctionDef>& pool,
                            const std::vector<FunctionDef>& withheld,
                            double val_fraction) {
  if (pool.empty()) throw Error("split_functions: empty pool");
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw Error("split_functions: val_fraction must be in [0, 1]");
  }
  CorpusSplit out;
  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const bool held = std::any_of(withheld.begin(), withheld.end(), [&](const auto& w) {
      return same_rule(w, pool[i]);
    });
    if (held) {
      out.withheld.push_back(pool[i]);
    } else {
      remaining.push_back(i);
    }
  }
  for (const auto& w : withheld) {
    const bool found = std::any_of(pool.begin(), pool.end(),
                                   [&](const auto& f) { return same_rule(w, f); });
    if (!found) throw Error("split_functions: an experiment function is not in the pool");
  }
  const auto n_val = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(remaining.size())));
  Rng rng(seed);
  std::vector<std::size_t> order = remaining;
  rng.shuffle(order);
  std::set<std::size_t> val(order.begin(), order.begin() + n_val);
  for (auto i : remaining) {
    (val.count(i) ? out.validation : out.train).push_back(pool[i]);
  }
  return out;
}

nlohmann::json split_to_json(const Grammar& g, const CorpusSplit& s) {
  auto list = [&](const std::vector<FunctionDef>& fs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : fs) a.push_back(f.handle + ": " + serialize_function(g, f));
    return a;
  };
  return {{"train", list(s.train)},
          {"validation", list(s.validation)},
          {"withheld", list(s.withheld)}};
}

CorpusSplit split_from_json(const Grammar& g, const nlohmann::json& j) {
  auto list = [&](const nlohmann::json& a) {
    std::string text;
    for (const auto& line : a) text += line.get<std::string>() + "\n";
    return parse_function_file(g, text);
  };
  return {list(j.at("train")), list(j.at("validation")), list(j.at("withheld"))};
}

// ---- base episodes --------------------------------------------------------

EpisodeSampler::EpisodeSampler(const Grammar& g, std::span<const CarTree> cars,
                               const InteractionIndex& index)
    : g_(g), cars_(cars), index_(index) {}

Episode EpisodeSampler::sample(std::uint64_t seed, Family family,
                               Provenance provenance, std::string id) const {
  using S = BaseShape;
  Rng rng(seed);
  auto [a, b] = index_.sample_pair(rng, family_relation(family));
  a.handle = "fA";
  b.handle = "fB";

  Episode e;
  e.id = std::move(id);
  e.provenance = provenance;
  e.family = family;
  e.seed = seed;
  e.functions = {a, b};

  for (const FunctionDef* f : {&a, &b}) {
    auto valid = [f](const CarTree& c) { return is_effective_input(*f, c); };
    auto invalid = [f](const CarTree& c) { return !is_valid_input(*f, c); };
    const auto sv = draw(rng, cars_, valid, {}, S::kValidSupports, "valid support");
    const auto si = draw(rng, cars_, invalid, {}, S::kInvalidSupports, "invalid support");
    for (const auto& c : sv) e.supports.push_back({c, f->handle, apply(*f, c), true});
    for (const auto& c : si) e.supports.push_back({c, f->handle, c, false});

    std::vector<CarTree> seen = sv;
    seen.insert(seen.end(), si.begin(), si.end());
    const auto qv = draw(rng, cars_, valid, seen, S::kValidSingles, "valid query");
    const auto qi = draw(rng, cars_, invalid, seen, S::kInvalidSingles, "invalid query");
    for (const auto& c : qv) {
      e.queries.push_back({"", c, {f->handle}, apply(*f, c), ConditionTag::kSingleValid});
    }
    for (const auto& c : qi) {
      e.queries.push_back({"", c, {f->handle}, c, ConditionTag::kSingleInvalid});
    }
  }

  const Relation rel = family_relation(family);
  auto witness = [&](const CarTree& c) { return witnesses(rel, a, b, c); };
  const auto composed =
      draw(rng, cars_, witness, {}, 2 * S::kComposedPerOrder, "composition");
  const bool feeding = family == Family::kFeeding;
  for (std::size_t i = 0; i < composed.size(); ++i) {
    const bool forward = i < S::kComposedPerOrder;
    Query q;
    q.input = composed[i];
    q.handles = forward ? std::vector<std::string>{"fA", "fB"}
                        : std::vector<std::string>{"fB", "fA"};
    q.target = forward ? compose(a, b, q.input) : compose(b, a, q.input);
    q.condition = forward ? (feeding ? ConditionTag::kFeeding : ConditionTag::kBleeding)
                          : (feeding ? ConditionTag::kCounterFeeding
                                     : ConditionTag::kCounterBleeding);
    e.queries.push_back(std::move(q));
  }
  for (std::size_t i = 0; i < e.queries.size(); ++i) e.queries[i].id = query_id(i);
  rng.shuffle(e.supports);
  return e;
}

Episode gen_base_episode(const Grammar& g, std::uint64_t seed,
                         const CorpusSplit& split, Family family, Quantifier q) {
  const auto cars = enumerate_cars(g);
  InteractionIndex index(g, split.train, q);
  EpisodeSampler sampler(g, cars, index);
  return sampler.sample(seed, family, Provenance::kBaseTrain, "episode");
}

}  // namespace carfn
