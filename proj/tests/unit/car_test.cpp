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

#include <algorithm>
#include <random>
#include <cmath>
#include <map>
#include <set>

#include "carfn/car.hpp"
#include "carfn/error.hpp"
#include "carfn/rng.hpp"
#include "doctest.h"
#include "reference.hpp"

using namespace carfn;

namespace {

CarTree car_of(std::initializer_list<std::pair<PartKind, PartSpec>> parts) {
  CarTree c;
  for (const auto& [k, s] : parts) c.set(k, s);
  return c;
}

PartSpec spec(int type, int color) {
  return {PartType{static_cast<std::uint8_t>(type)}, Color{static_cast<std::uint8_t>(color)}};
}

}  // namespace

TEST_CASE("default grammar car count matches the per-slot product") {
  const Grammar g = Grammar::standard();
  const std::uint64_t per_slot = 1 + 3 * 7;
  CHECK(g.slot_states() == per_slot);
  CHECK(g.car_count() == per_slot * per_slot * per_slot);
  CHECK(g.car_count() == 10648);
  CHECK(enumerate_cars(g).size() == ref::all_cars().size());
}

TEST_CASE("smaller grammars follow the same closed form") {
  Grammar g;
  g.parts = {PartKind::kWindow, PartKind::kLights};
  g.num_types = 2;
  g.colors = {"NONE", "GREEN", "BLUE"};
  CHECK(g.car_count() == 7 * 7);
  CHECK(enumerate_cars(g).size() == 49);
}

TEST_CASE("enumeration is sorted, starts with the bare body and indexes bijectively") {
  const Grammar g = Grammar::standard();
  const auto cars = enumerate_cars(g);
  CHECK(cars.front().part_count() == 0);
  CHECK(std::is_sorted(cars.begin(), cars.end()));
  CHECK(std::adjacent_find(cars.begin(), cars.end()) == cars.end());
  for (std::uint64_t i = 0; i < cars.size(); i += 37) {
    CHECK(car_index(g, cars[i]) == i);
    CHECK(car_at(g, i) == cars[i]);
  }
  CHECK_THROWS_AS(car_at(g, cars.size()), Error);
}

TEST_CASE("enumeration agrees with the reference car list as a set") {
  const Grammar g = Grammar::standard();
  std::set<CarTree> ours;
  for (const auto& c : enumerate_cars(g)) ours.insert(c);
  std::set<CarTree> theirs;
  for (const auto& c : ref::all_cars()) theirs.insert(ref::to_tree(c));
  CHECK(ours == theirs);
}

TEST_CASE("token serialization") {
  const Grammar g = Grammar::standard();
  const CarTree c = car_of({{PartKind::kWindow, spec(1, 0)}, {PartKind::kLights, spec(3, 3)}});
  CHECK(join_tokens(serialize_car(g, c)) == "CAR ( WINDOW T1 NONE ) ( LIGHTS T3 GREEN )");
  CHECK(join_tokens(serialize_car(g, CarTree{})) == "CAR");

  const auto toks = split_tokens("CAR ( TIRES T2 SKY )");
  CHECK(parse_car(g, toks) == car_of({{PartKind::kTires, spec(2, 2)}}));
}

TEST_CASE("token round trip over the whole space") {
  const Grammar g = Grammar::standard();
  for (const auto& c : enumerate_cars(g)) {
    REQUIRE(parse_car(g, serialize_car(g, c)) == c);
    REQUIRE(car_from_json(g, car_to_json(g, c)) == c);
  }
}

TEST_CASE("parse errors report the token position") {
  const Grammar g = Grammar::standard();
  auto column_of = [&](std::string_view text) -> std::size_t {
    try {
      parse_car(g, split_tokens(text));
    } catch (const ParseError& e) {
      return e.column();
    }
    return 0;
  };
  CHECK(column_of("CAR ( WINDOW T4 NONE )") == 4);
  CHECK(column_of("CAR ( WINDOW T1 PINK )") == 5);
  CHECK(column_of("BUS") == 1);
  CHECK(column_of("CAR ( TIRES T1 NONE ) ( WINDOW T1 NONE )") == 8);
  CHECK(column_of("CAR ( TIRES T1 NONE ) ( TIRES T1 NONE )") == 8);
  CHECK(column_of("CAR ( TIRES T1 NONE") == 6);
  CHECK(column_of("CAR ( TIRES T1 NONE ) )") == 7);
}

TEST_CASE("vocabulary is closed and versioned") {
  const Grammar g = Grammar::standard();
  const Vocabulary v(g);
  CHECK(v.tokens().front() == "<pad>");
  for (const char* t : {"CAR", "(", ")", "WINDOW", "TIRES", "LIGHTS", "T1", "T2", "T3", "NONE",
                        "VERMILION", "fA", "fB", "fC", "->", "|", "<sos>", "<eos>"}) {
    CHECK(v.contains(t));
  }
  CHECK(v.tokens().size() == 3 + 3 + 3 + 3 + 7 + 3 + 2);
  CHECK_FALSE(v.contains("fD"));
  const TokenSeq bad = {"CAR", "fD"};
  CHECK_THROWS_AS(v.check(bad), VocabularyError);
  CHECK(v.to_text().rfind("# carfn-vocab 1\n", 0) == 0);
}

TEST_CASE("diffs") {
  const Grammar g = Grammar::standard();
  const CarTree a = car_of({{PartKind::kWindow, spec(1, 0)}, {PartKind::kTires, spec(2, 1)}});
  const CarTree b = car_of({{PartKind::kWindow, spec(1, 3)}, {PartKind::kLights, spec(1, 1)}});
  CHECK(diff_cars(a, a).empty());
  const auto d = diff_cars(a, b);
  REQUIRE(d.size() == 3);
  CHECK(d[0].change() == ChangeKind::kRecolored);
  CHECK(d[1].change() == ChangeKind::kRemoved);
  CHECK(d[2].change() == ChangeKind::kAdded);
  CHECK(diff_cars(a, car_of({{PartKind::kWindow, spec(3, 5)}, {PartKind::kTires, spec(2, 1)}}))
            .front()
            .change() == ChangeKind::kRetypedAndRecolored);
  CHECK_THROWS_AS(apply_diff(b, d), Error);
}

TEST_CASE("diffs invert and patch on random pairs") {
  const Grammar g = Grammar::standard();
  const auto cars = enumerate_cars(g);
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::size_t> pick(0, cars.size() - 1);
  for (int i = 0; i < 2000; ++i) {
    const auto& a = cars[pick(gen)];
    const auto& b = cars[pick(gen)];
    const auto ab = diff_cars(a, b);
    const auto ba = diff_cars(b, a);
    REQUIRE(ab.size() == ba.size());
    for (std::size_t j = 0; j < ab.size(); ++j) CHECK(ab[j].inverted() == ba[j]);
    CHECK(apply_diff(a, ab) == b);
  }
}

TEST_CASE("seeded sampling is deterministic and honours predicates") {
  const Grammar g = Grammar::standard();
  auto two_parts = [](const CarTree& c) { return c.part_count() == 2; };
  const CarTree x = sample_car(g, 11, two_parts);
  CHECK(x == sample_car(g, 11, two_parts));
  CHECK(x.part_count() == 2);
  CHECK_THROWS_AS(sample_car(g, 1, [](const CarTree& c) { return c.part_count() > 3; }),
                  UnsatisfiableError);
}

TEST_CASE("grammar validation") {
  Grammar g;
  g.colors = {"GREEN", "NONE"};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = Grammar{};
  g.parts = {PartKind::kTires, PartKind::kWindow};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = Grammar{};
  nlohmann::json j = g;
  CHECK(j.get<Grammar>() == g);
}

TEST_CASE("derived seeds are stable and stream-separated") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  Rng r(5);
  std::vector<int> counts(3);
  for (int i = 0; i < 3000; ++i) ++counts[r.below(3)];
  for (int c : counts) CHECK(c > 850);
  const auto idx = r.sample_indices(50, 50);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 50);
}

TEST_CASE("constrained sampling is uniform over the matching cars") {
  const Grammar g = Grammar::standard();
  const auto cars = enumerate_cars(g);
  auto one_part = [](const CarTree& c) { return c.part_count() == 1; };
  const auto matching = std::count_if(cars.begin(), cars.end(), one_part);
  REQUIRE(matching == 63);
  Rng rng(42);
  std::map<CarTree, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[sample_car(cars, rng, one_part)];
  CHECK(counts.size() == 63);
  const double p = 1.0 / 63.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& [car, n] : counts) {
    CHECK(car.part_count() == 1);
    CHECK(std::abs(n - draws * p) < 4 * sigma);
  }
}
