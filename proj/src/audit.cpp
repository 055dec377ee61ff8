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

#include "carfn/audit.hpp"

#include <algorithm>
#include <set>

#include "carfn/experiment.hpp"

namespace carfn {
namespace {

class Auditor {
 public:
  explicit Auditor(const Corpus& c) : c_(c), g_(c.header.grammar) {
    for (const auto& f : c.header.split.train) train_.insert(serialize_function(g_, f));
    for (const auto& f : c.header.split.validation) val_.insert(serialize_function(g_, f));
    for (const auto& f : c.header.split.withheld) held_.insert(serialize_function(g_, f));
  }

  AuditReport run() {
    report_.episodes = c_.episodes.size();
    if (c_.header.count != c_.episodes.size()) {
      fail("header", "count " + std::to_string(c_.header.count) + " but " +
                         std::to_string(c_.episodes.size()) + " episodes");
    }
    for (const auto& e : c_.episodes) episode(e);
    const auto prov = c_.header.provenance;
    if (prov != Provenance::kHuman) {
      const std::size_t n = c_.episodes.size();
      const std::size_t fcf = report_.families["F/CF"];
      const std::size_t blcbl = report_.families["BL/CBL"];
      if (fcf != (n + 1) / 2 || blcbl != n / 2) {
        fail("corpus", "family split " + std::to_string(fcf) + "/" + std::to_string(blcbl) +
                           " for " + std::to_string(n) + " episodes");
      }
    }
    return std::move(report_);
  }

 private:
  void fail(const std::string& where, const std::string& what) {
    report_.violations.push_back(where + ": " + what);
  }

  bool human_style(const Episode& e) const { return e.provenance == Provenance::kHuman; }

  void episode(const Episode& e) {
    ++report_.families[std::string(family_name(e.family))];
    if (e.provenance != c_.header.provenance) fail(e.id, "provenance differs from header");
    if (e.functions.size() != 2) {
      fail(e.id, "expected 2 functions, got " + std::to_string(e.functions.size()));
      return;
    }
    hygiene(e);
    relation(e);
    supports(e);
    queries(e);
    shape(e);
  }

  void hygiene(const Episode& e) {
    for (const auto& f : e.functions) {
      const auto dsl = serialize_function(g_, f);
      const bool withheld = held_.count(dsl) > 0;
      switch (e.provenance) {
        case Provenance::kBaseTrain:
        case Provenance::kSynthetic:
          if (!train_.count(dsl)) fail(e.id, "function not in train split: " + dsl);
          break;
        case Provenance::kBaseVal:
          if (!val_.count(dsl)) fail(e.id, "function not in validation split: " + dsl);
          break;
        case Provenance::kHuman:
          if (!withheld) fail(e.id, "experiment function not withheld: " + dsl);
          break;
      }
      if (e.provenance != Provenance::kHuman && withheld) {
        fail(e.id, "withheld experiment function used: " + dsl);
      }
    }
  }

  void relation(const Episode& e) {
    const auto s = summarize_pair(g_, e.functions[0], e.functions[1]);
    const Relation got =
        c_.header.quantifier == Quantifier::kExistential ? s.existential : s.universal;
    if (got != family_relation(e.family)) {
      fail(e.id, std::string("pair relation is ") + std::string(relation_name(got)) +
                     ", family needs " + std::string(relation_name(family_relation(e.family))));
    } else if (!s.counter_fires) {
      fail(e.id, "counter order blocks the first function");
    }
  }

  void supports(const Episode& e) {
    for (std::size_t i = 0; i < e.supports.size(); ++i) {
      const auto& s = e.supports[i];
      const std::string where = e.id + " support " + std::to_string(i);
      const auto* f = find(e, s.handle);
      if (!f) {
        fail(where, "unknown handle " + s.handle);
        continue;
      }
      if (s.output != apply(*f, s.input)) fail(where, "output differs from apply");
      if (s.valid != is_valid_input(*f, s.input)) fail(where, "validity flag wrong");
      if (s.valid && s.output == s.input) fail(where, "valid example leaves car unchanged");
      if (!s.valid && s.output != s.input) fail(where, "invalid example changes car");
    }
  }

  void queries(const Episode& e) {
    const auto& f0 = e.functions[0].handle;
    const auto& f1 = e.functions[1].handle;
    for (const auto& q : e.queries) {
      const std::string where = e.id + " " + q.id;
      std::vector<FunctionDef> fs;
      for (const auto& h : q.handles) {
        const auto* f = find(e, h);
        if (!f) {
          fail(where, "unknown handle " + h);
          return;
        }
        if (std::none_of(e.supports.begin(), e.supports.end(),
                         [&](const auto& s) { return s.handle == h; })) {
          fail(where, "handle " + h + " has no supports");
        }
        fs.push_back(*f);
      }
      if (q.handles.empty() || q.handles.size() > 2) {
        fail(where, "expected 1 or 2 handles");
        continue;
      }
      if (is_composed(q.condition)) {
        ++report_.composed_queries;
        if (q.flipped) ++report_.flipped_queries;
        const bool forward = q.condition == ConditionTag::kFeeding ||
                             q.condition == ConditionTag::kBleeding;
        const bool family_ok = (e.family == Family::kFeeding) ==
                               (q.condition == ConditionTag::kFeeding ||
                                q.condition == ConditionTag::kCounterFeeding);
        const std::vector<std::string> want =
            forward ? std::vector<std::string>{f0, f1} : std::vector<std::string>{f1, f0};
        if (!family_ok || q.handles != want) fail(where, "condition does not match handles");
      } else {
        if (q.handles.size() != 1) fail(where, "single-function query with 2 handles");
        const bool valid = is_valid_input(fs.front(), q.input);
        if (valid != (q.condition == ConditionTag::kSingleValid)) {
          fail(where, "single-function validity tag wrong");
        }
        if (q.flipped) fail(where, "single-function query marked flipped");
      }
      if (q.human) {
        ++report_.human_queries;
        if (c_.header.provenance != Provenance::kHuman) fail(where, "human target outside H");
        continue;
      }
      std::vector<FunctionDef> order = fs;
      if (q.flipped) std::reverse(order.begin(), order.end());
      if (q.target != compose(order, q.input)) fail(where, "target differs from oracle");
      if (q.flipped && c_.header.provenance != Provenance::kSynthetic) {
        fail(where, "flipped target outside S");
      }
    }
  }

  void shape(const Episode& e) {
    std::map<std::string, std::size_t> valid, invalid, singles, singles_valid;
    std::map<ConditionTag, std::size_t> composed;
    for (const auto& s : e.supports) (s.valid ? valid : invalid)[s.handle]++;
    for (const auto& q : e.queries) {
      if (is_composed(q.condition)) {
        composed[q.condition]++;
      } else {
        singles[q.handles.front()]++;
        if (q.condition == ConditionTag::kSingleValid) singles_valid[q.handles.front()]++;
      }
    }
    const bool h = human_style(e);
    auto expect = [&](const std::string& what, std::size_t got, std::size_t want) {
      if (got != want) {
        fail(e.id, what + " = " + std::to_string(got) + ", expected " + std::to_string(want));
      }
    };
    for (const auto& f : e.functions) {
      const auto& hd = f.handle;
      if (h) {
        expect("supports for " + hd, valid[hd] + invalid[hd], ExperimentShape::kTraining);
        expect("single queries for " + hd, singles[hd], ExperimentShape::kSinglesPerFunction);
      } else {
        expect("valid supports for " + hd, valid[hd], BaseShape::kValidSupports);
        expect("invalid supports for " + hd, invalid[hd], BaseShape::kInvalidSupports);
        expect("single queries for " + hd, singles[hd],
               BaseShape::kValidSingles + BaseShape::kInvalidSingles);
        expect("valid single queries for " + hd, singles_valid[hd], BaseShape::kValidSingles);
      }
    }
    const std::size_t per_order =
        h ? ExperimentShape::kComposedPerCondition : BaseShape::kComposedPerOrder;
    const auto tags = e.family == Family::kFeeding
                          ? std::array{ConditionTag::kFeeding, ConditionTag::kCounterFeeding}
                          : std::array{ConditionTag::kBleeding, ConditionTag::kCounterBleeding};
    for (auto t : tags) {
      expect(std::string(tag_name(t)) + " queries", composed[t], per_order);
    }
    const std::size_t total_supports = e.supports.size();
    const std::size_t total_queries = e.queries.size();
    if (h) {
      expect("supports", total_supports, ExperimentShape::kEpisodeSupports);
      expect("queries", total_queries,
             ExperimentShape::kEpisodeSingles + ExperimentShape::kEpisodeComposed);
    } else {
      expect("supports", total_supports, BaseShape::kSupports);
      expect("queries", total_queries, BaseShape::kQueries);
      for (const auto& q : e.queries) {
        if (is_composed(q.condition)) continue;
        for (const auto& s : e.supports) {
          if (s.handle == q.handles.front() && s.input == q.input) {
            fail(e.id + " " + q.id, "query input repeats a support input");
          }
        }
      }
    }
  }

  static const FunctionDef* find(const Episode& e, const std::string& h) {
    for (const auto& f : e.functions) {
      if (f.handle == h) return &f;
    }
    return nullptr;
  }

  const Corpus& c_;
  const Grammar& g_;
  std::set<std::string> train_, val_, held_;
  AuditReport report_;
};

}  // namespace

AuditReport audit_corpus(const Corpus& c) { return Auditor(c).run(); }

nlohmann::json audit_to_json(const AuditReport& r, std::size_t max_violations) {
  nlohmann::json first = nlohmann::json::array();
  for (std::size_t i = 0; i < r.violations.size() && i < max_violations; ++i) {
    first.push_back(r.violations[i]);
  }
  return {{"episodes", r.episodes},
          {"families", r.families},
          {"composed_queries", r.composed_queries},
          {"flipped_queries", r.flipped_queries},
          {"flip_fraction", r.flip_fraction()},
          {"human_queries", r.human_queries},
          {"violation_count", r.violations.size()},
          {"violations", first},
          {"ok", r.ok()}};
}

}  // namespace carfn
