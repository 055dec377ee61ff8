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

#include <map>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "carfn/error.hpp"
#include "carfn/interaction.hpp"
#include "carfn/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "reference.hpp"

using namespace carfn;

namespace {

const Grammar kG = Grammar::standard();

Relation to_relation(ref::Rel r) {
  switch (r) {
    case ref::kFeeds: return Relation::kFeeds;
    case ref::kBleeds: return Relation::kBleeds;
    default: return Relation::kNone;
  }
}

// Pairs biased toward a shared target part.
std::vector<std::pair<FunctionDef, FunctionDef>> random_pairs(std::size_t n, std::uint64_t seed) {
  const auto pool = enumerate_functions(kG);
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::pair<FunctionDef, FunctionDef>> out;
  while (out.size() < n) {
    const auto& f = pool[pick(gen)];
    const auto& h = pool[pick(gen)];
    if (out.size() % 4 != 0 && f.target() != h.target()) continue;
    out.emplace_back(f, h);
  }
  return out;
}

}  // namespace

TEST_CASE("worked pairs") {
  const auto a = fixtures::named(kG, fixtures::kAddWindow, "A");
  const auto b = fixtures::named(kG, fixtures::kPaintGreen, "B");
  const auto c = fixtures::named(kG, fixtures::kRemoveWindow, "C");
  for (Quantifier q : {Quantifier::kExistential, Quantifier::kUniversal}) {
    CAPTURE(quantifier_name(q));
    CHECK(classify_pair(kG, a, b, q).relation == Relation::kFeeds);
    CHECK(classify_pair(kG, c, b, q).relation == Relation::kBleeds);
    CHECK(classify_pair(kG, a, a, q).relation == Relation::kNone);
    CHECK(classify_pair(kG, b, b, q).relation == Relation::kNone);
  }
  // Every windowless car is fed: 21^2 settings of the other two slots.
  CHECK(classify_pair(kG, a, b, Quantifier::kUniversal).witness_count == 22 * 22);
  // Removing bleeds painting on every car with an uncolored window.
  CHECK(classify_pair(kG, c, b, Quantifier::kUniversal).witness_count == 3 * 22 * 22);
  // Painting then removing: painting never touches removability.
  CHECK(classify_pair(kG, b, c, Quantifier::kExistential).relation == Relation::kNone);
}

TEST_CASE("witness inputs") {
  const auto a = fixtures::named(kG, fixtures::kAddWindow, "A");
  const auto b = fixtures::named(kG, fixtures::kPaintGreen, "B");
  const auto c = fixtures::named(kG, fixtures::kRemoveWindow, "C");
  const auto fed = witness_inputs(kG, a, b, Relation::kFeeds, 1);
  REQUIRE(fed.size() == 1);
  CHECK_FALSE(fed[0].has(PartKind::kWindow));
  const auto bled = witness_inputs(kG, c, b, Relation::kBleeds, 5);
  for (const auto& car : bled) {
    REQUIRE(car.has(PartKind::kWindow));
    CHECK(car.part(PartKind::kWindow)->color == kNoColor);
  }
  try {
    witness_inputs(kG, a, b, Relation::kFeeds, 1000);
    FAIL("expected exhaustion");
  } catch (const ExhaustedPoolError& e) {
    CHECK(e.available() == 484);
  }
}

TEST_CASE("classify_pair agrees with the reference sweep") {
  const auto cars = ref::all_cars();
  for (const auto& [f, h] : random_pairs(120, 99)) {
    const auto v = ref::brute(ref::from(f), ref::from(h), cars);
    const auto ex = classify_pair(kG, f, h, Quantifier::kExistential);
    const auto un = classify_pair(kG, f, h, Quantifier::kUniversal, 0);
    CAPTURE(serialize_function(kG, f));
    CAPTURE(serialize_function(kG, h));
    REQUIRE(ex.relation == to_relation(v.existential));
    REQUIRE(un.relation == to_relation(v.universal));
    CHECK(ex.witness_count == v.witnesses);
    for (const auto& w : ex.witnesses) CHECK(witnesses(ex.relation, f, h, w));
    const auto s = summarize_pair(kG, f, h);
    CHECK(s.existential == ex.relation);
    CHECK(s.universal == un.relation);
    CHECK(s.witness_count == ex.witness_count);
  }
}

TEST_CASE("feeding and bleeding never hold for the same ordered pair") {
  const auto pool = enumerate_functions(kG);
  // One slot suffices: other slots never matter for same-target pairs.
  std::vector<ref::Car> cars;
  for (const auto& s : ref::slot_states(3, 7)) cars.push_back({s, {}, {}});
  for (const auto& f : pool) {
    if (f.target() != PartKind::kWindow) continue;
    for (const auto& h : pool) {
      if (h.target() != PartKind::kWindow) continue;
      bool fed = false, bled = false;
      for (const auto& x : cars) {
        fed |= feeds_on(f, h, ref::to_tree(x));
        bled |= bleeds_on(f, h, ref::to_tree(x));
      }
      REQUIRE_FALSE((fed && bled));
    }
  }
}

TEST_CASE("the unique triplet of the worked pool") {
  const std::vector<FunctionDef> pool = {fixtures::named(kG, fixtures::kAddWindow, "p0"),
                                         fixtures::named(kG, fixtures::kPaintGreen, "p1"),
                                         fixtures::named(kG, fixtures::kRemoveWindow, "p2")};
  for (Quantifier q : {Quantifier::kExistential, Quantifier::kUniversal}) {
    const InteractionIndex index(kG, pool, q);
    CHECK(index.triplet_count() == 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t = sample_triplet(kG, seed, pool, q);
      CHECK(t.a.handle == "p0");
      CHECK(t.b.handle == "p1");
      CHECK(t.c.handle == "p2");
    }
  }
  const std::vector<FunctionDef> no_bleed(pool.begin(), pool.begin() + 2);
  CHECK_THROWS_AS(sample_triplet(kG, 0, no_bleed), ExhaustedPoolError);
  CHECK_THROWS_AS(sample_interacting_pair(kG, 0, Relation::kBleeds, no_bleed),
                  ExhaustedPoolError);
}

TEST_CASE("sampled pairs and triplets verify against classify_pair") {
  const auto pool = enumerate_functions(kG);
  const InteractionIndex index(kG, pool, Quantifier::kUniversal);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto [f, h] = index.sample_pair(rng, Relation::kFeeds);
    CHECK(classify_pair(kG, f, h, Quantifier::kUniversal, 0).relation == Relation::kFeeds);
    const auto t = index.sample_triplet(rng);
    CHECK(classify_pair(kG, t.a, t.b, Quantifier::kUniversal, 0).relation == Relation::kFeeds);
    CHECK(classify_pair(kG, t.c, t.b, Quantifier::kUniversal, 0).relation == Relation::kBleeds);
  }
  const auto p1 = sample_interacting_pair(kG, 17, Relation::kBleeds, pool);
  const auto p2 = sample_interacting_pair(kG, 17, Relation::kBleeds, pool);
  CHECK(p1 == p2);
}

TEST_CASE("pair sampling is uniform over the qualifying pairs") {
  std::vector<FunctionDef> pool;
  for (const auto& f : enumerate_functions(kG)) {
    if (f.target() == PartKind::kTires && pool.size() < 60) pool.push_back(f);
  }
  const InteractionIndex index(kG, pool, Quantifier::kExistential);
  const auto& qualifying = index.pairs(Relation::kBleeds);
  REQUIRE(qualifying.size() >= 5);
  std::map<std::pair<std::string, std::string>, int> counts;
  Rng rng(2024);
  const int draws = 1000 * static_cast<int>(qualifying.size()) / 10;
  for (int i = 0; i < draws; ++i) {
    const auto [f, h] = index.sample_pair(rng, Relation::kBleeds);
    ++counts[{f.handle, h.handle}];
  }
  CHECK(counts.size() == qualifying.size());
  const double expected = static_cast<double>(draws) / qualifying.size();
  double chi2 = 0.0;
  for (const auto& [key, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(qualifying.size() - 1));
  CHECK(chi2 < boost::math::quantile(dist, 0.999));
}

TEST_CASE("index tables do not depend on worker count") {
  std::vector<FunctionDef> pool;
  const auto all = enumerate_functions(kG);
  for (std::size_t i = 0; i < all.size(); i += 7) pool.push_back(all[i]);
  const InteractionIndex one(kG, pool, Quantifier::kUniversal, 1);
  const InteractionIndex four(kG, pool, Quantifier::kUniversal, 4);
  CHECK(one.pairs(Relation::kFeeds) == four.pairs(Relation::kFeeds));
  CHECK(one.pairs(Relation::kBleeds) == four.pairs(Relation::kBleeds));
  CHECK(one.triplet_count() == four.triplet_count());
}

TEST_CASE("interaction CSV") {
  const auto a = fixtures::named(kG, fixtures::kAddWindow, "A");
  const auto b = fixtures::named(kG, fixtures::kPaintGreen, "B");
  std::ostringstream out;
  write_interaction_csv(out, {{"A", "B", summarize_pair(kG, a, b)},
                              {"A", "A", summarize_pair(kG, a, a)}});
  CHECK(out.str() ==
        "handle_f,handle_g,relation_existential,relation_universal,witness_count\n"
        "A,B,feeds,feeds,484\n"
        "A,A,none,none,0\n");
}
