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
#include <set>

#include "carfn/car.hpp"
#include "carfn/error.hpp"
#include "carfn/function.hpp"
#include "doctest.h"
#include "reference.hpp"

using namespace carfn;

namespace {

const Grammar kG = Grammar::standard();

FunctionDef fn(std::string_view dsl) { return parse_function(kG, dsl); }

}  // namespace

TEST_CASE("the add-window function") {
  const auto f = fn("ADD WINDOW T1 NONE IF WINDOW ABSENT");
  CHECK(f.kind() == TransformKind::kAdd);
  CHECK(f.target() == PartKind::kWindow);
  CHECK_FALSE(f.condition.present);

  CarTree bare;
  CHECK(is_valid_input(f, bare));
  const CarTree out = apply(f, bare);
  CHECK(join_tokens(serialize_car(kG, out)) == "CAR ( WINDOW T1 NONE )");
  CHECK_FALSE(is_valid_input(f, out));
  CHECK(apply(f, out) == out);
  CHECK_FALSE(apply_strict(f, out).has_value());

  const auto pool = enumerate_functions(kG);
  CHECK(std::any_of(pool.begin(), pool.end(), [&](const auto& p) { return same_rule(p, f); }));
}

TEST_CASE("filters omitted in the text mean ANY, serialization spells them out") {
  const auto a = fn("PAINT WINDOW GREEN IF WINDOW PRESENT COLOR NONE");
  const auto b = fn("PAINT WINDOW GREEN IF WINDOW PRESENT TYPE ANY COLOR NONE");
  CHECK(same_rule(a, b));
  CHECK(serialize_function(kG, a) == "PAINT WINDOW GREEN IF WINDOW PRESENT TYPE ANY COLOR NONE");
  CHECK(serialize_function(kG, fn("REMOVE TIRES IF TIRES PRESENT")) ==
        "REMOVE TIRES IF TIRES PRESENT TYPE ANY COLOR ANY");
  CHECK(serialize_function(kG, fn("EDITPART LIGHTS T2 IF LIGHTS PRESENT TYPE T1")) ==
        "EDITPART LIGHTS T2 IF LIGHTS PRESENT TYPE T1 COLOR ANY");
}

TEST_CASE("DSL errors carry a location") {
  auto where = [](std::string_view text) -> std::pair<std::size_t, std::size_t> {
    try {
      parse_function(kG, text, 3);
    } catch (const ParseError& e) {
      return {e.line(), e.column()};
    }
    return {0, 0};
  };
  CHECK(where("ADD WINDOW T1 PINK IF WINDOW ABSENT") == std::pair<std::size_t, std::size_t>{3, 15});
  CHECK(where("FRY WINDOW").first == 3);
  CHECK(where("FRY WINDOW").second == 1);
  CHECK(where("ADD WINDOW T1 NONE IF TIRES ABSENT").second > 0);
  CHECK(where("ADD WINDOW T1 NONE IF WINDOW PRESENT").second > 0);
  CHECK(where("PAINT WINDOW GREEN IF WINDOW PRESENT COLOR GREEN").second > 0);
  CHECK(where("ADD WINDOW T1 NONE IF WINDOW ABSENT extra").second > 0);
}

TEST_CASE("function files") {
  const std::string text =
      "# fixture\n"
      "fA: ADD WINDOW T1 NONE IF WINDOW ABSENT\n"
      "\n"
      "PAINT WINDOW GREEN IF WINDOW PRESENT TYPE ANY COLOR NONE  # trailing\n";
  const auto fs = parse_function_file(kG, text);
  REQUIRE(fs.size() == 2);
  CHECK(fs[0].handle == "fA");
  CHECK(fs[1].handle == "fn0001");
  const auto again = parse_function_file(kG, format_function_file(kG, fs));
  CHECK(again == fs);

  try {
    parse_function_file(kG, "ADD WINDOW T1 NONE IF WINDOW ABSENT\nREMOVE\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("enumeration count matches the closed form") {
  const std::size_t T = 3, C = 7, P = 3;
  const std::size_t present_conditions = (T + 1) * (C + 1);
  const std::size_t add = T * C;
  const std::size_t remove = present_conditions;
  // Painting to a pinned color or retyping to a pinned type changes nothing.
  const std::size_t paint = (T + 1) * (1 * C + C * (C - 1));
  const std::size_t edit = (C + 1) * (1 * T + T * (T - 1));
  const auto pool = enumerate_functions(kG);
  CHECK(pool.size() == P * (add + remove + paint + edit));
  CHECK(pool.size() == 963);

  const auto by_kind = count_by_kind(pool);
  CHECK(by_kind.at(TransformKind::kAdd) == P * add);
  CHECK(by_kind.at(TransformKind::kRemove) == P * remove);
  CHECK(by_kind.at(TransformKind::kPaint) == P * paint);
  CHECK(by_kind.at(TransformKind::kEditPart) == P * edit);

  std::set<std::string> texts;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(pool[i].handle == pool_handle(i));
    CHECK(pool[i].condition.target == pool[i].transform.target);
    CHECK_FALSE(is_degenerate(kG, pool[i]));
    texts.insert(serialize_function(kG, pool[i]));
  }
  CHECK(texts.size() == pool.size());
}

TEST_CASE("extensional dedup only removes behaviorally identical functions") {
  const auto pool = enumerate_functions(kG);
  const auto dedup = enumerate_functions(kG, {.dedup_extensional = true});
  CHECK(dedup.size() <= pool.size());
  const auto cars = ref::all_cars();
  std::set<std::vector<ref::Car>> behaviours;
  for (const auto& f : dedup) {
    std::vector<ref::Car> outs;
    const auto r = ref::from(f);
    for (const auto& c : cars) outs.push_back(ref::apply(r, c));
    behaviours.insert(outs);
  }
  CHECK(behaviours.size() == dedup.size());
}

TEST_CASE("DSL round trip over the pool") {
  for (const auto& f : enumerate_functions(kG)) {
    const auto text = serialize_function(kG, f);
    const auto back = parse_function(kG, text);
    CHECK(same_rule(back, f));
    CHECK(serialize_function(kG, back) == text);
    CHECK(same_rule(function_from_json(kG, function_to_json(kG, f)), f));
  }
}

TEST_CASE("validity and application agree with the reference over sampled functions") {
  const auto pool = enumerate_functions(kG);
  const auto cars = ref::all_cars();
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int n = 0; n < 100; ++n) {
    const auto& f = pool[pick(gen)];
    const auto r = ref::from(f);
    for (const auto& c : cars) {
      const CarTree t = ref::to_tree(c);
      REQUIRE(is_valid_input(f, t) == ref::valid(r, c));
      const CarTree out = apply(f, t);
      REQUIRE(ref::from_tree(out) == ref::apply(r, c));
      const auto d = diff_cars(t, out);
      REQUIRE(d.size() <= 1);
      if (!d.empty()) CHECK(d[0].kind == f.target());
      if (!is_valid_input(f, t)) CHECK(out == t);
    }
  }
}

TEST_CASE("check_function rejects malformed definitions") {
  FunctionDef f = fn("PAINT WINDOW GREEN IF WINDOW PRESENT");
  f.condition.target = PartKind::kTires;
  CHECK_THROWS_AS(check_function(kG, f), Error);
  f = fn("ADD WINDOW T1 NONE IF WINDOW ABSENT");
  std::get<AddPart>(f.transform.op).spec.type = PartType{9};
  CHECK_THROWS_AS(check_function(kG, f), Error);
  CHECK_NOTHROW(check_function(kG, fn("EDITPART TIRES T3 IF TIRES PRESENT TYPE T1 COLOR BLUE")));
}
