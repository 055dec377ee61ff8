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
#include <cmath>
#include <random>

#include "carfn/error.hpp"
#include "carfn/metrics.hpp"
#include "doctest.h"
#include "scoring_fixtures.hpp"

using namespace carfn;

namespace {

ParticipantAccuracy participant(std::string id, double f, double cf, double bl, double cbl) {
  return {std::move(id),
          {{ConditionTag::kFeeding, f},
           {ConditionTag::kCounterFeeding, cf},
           {ConditionTag::kBleeding, bl},
           {ConditionTag::kCounterBleeding, cbl}}};
}

}  // namespace

TEST_CASE("all-correct generations") {
  auto recs = fixtures::planted_records().records;
  for (auto& r : recs) r.produced = r.expected;
  const auto m = score_generations(recs);
  CHECK(m.overall.accuracy.mean == 1.0);
  CHECK(m.overall.incorrect == 0);
  CHECK(m.overall.error_proportions.empty());
  for (const auto& [t, c] : m.by_condition) CHECK(c.accuracy.mean == 1.0);
  CHECK_THROWS_AS(score_generations({}), Error);
}

TEST_CASE("planted error mix is recovered exactly") {
  const auto planted = fixtures::planted_records();
  REQUIRE(planted.records.size() == 1000);
  for (const auto& r : planted.records) CHECK(classify_error(r).name().size() > 0);
  const auto m = score_generations(planted.records);
  CHECK(m.overall.accuracy.records == 1000);
  CHECK(m.overall.incorrect == 400);
  for (const auto& [name, n] : planted.counts) {
    if (name == "correct") continue;
    CAPTURE(name);
    CHECK(m.overall.error_counts.at(name) == n);
    CHECK(m.overall.error_proportions.at(name) == doctest::Approx(n / 400.0).epsilon(1e-12));
  }
  CHECK(m.overall.ambiguous_copies == 100);
  double sum = 0.0;
  for (const auto& [name, p] : m.by_condition.at(ConditionTag::kFeeding).error_proportions) {
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("target-means fixture") {
  const auto m = score_generations(fixtures::target_means_records());
  auto acc = [&](ConditionTag t) { return m.by_condition.at(t).accuracy.mean; };
  CHECK(std::round(m.overall.accuracy.mean * 1000) == 868);
  CHECK(std::round(acc(ConditionTag::kFeeding) * 1000) == 858);
  CHECK(std::round(acc(ConditionTag::kCounterFeeding) * 1000) == 863);
  CHECK(std::round(acc(ConditionTag::kBleeding) * 1000) == 863);
  CHECK(std::round(acc(ConditionTag::kCounterBleeding) * 1000) == 888);
  CHECK(m.by_condition.at(ConditionTag::kFeeding).accuracy.groups == 117);
  REQUIRE(m.bias.has_value());
  CHECK(m.bias->participants == 117);
  const std::string table = format_metrics_table({{"human", m}});
  CHECK(table.find("0.868") != std::string::npos);
  CHECK(table.find("0.888") != std::string::npos);
}

TEST_CASE("standard errors use group means") {
  std::vector<GenerationRecord> recs;
  const fixtures::Triplet t;
  const auto tag = ConditionTag::kFeeding;
  // Group X: 1 of 2 correct; group Y: 2 of 2 correct.
  for (int i = 0; i < 4; ++i) {
    const auto input = t.input(tag, i);
    auto r = make_record(i < 2 ? "X" : "Y", tag, input, t.order(tag), std::nullopt);
    r.produced = i == 0 ? input : r.expected;
    recs.push_back(r);
  }
  const auto m = score_generations(recs);
  CHECK(m.overall.accuracy.mean == doctest::Approx(0.75));
  // sd of {0.5, 1.0} is sqrt(0.125); sem divides by sqrt(2).
  REQUIRE(m.overall.accuracy.sem.has_value());
  CHECK(*m.overall.accuracy.sem == doctest::Approx(0.25));
  recs.resize(2);
  CHECK_FALSE(score_generations(recs).overall.accuracy.sem.has_value());
}

TEST_CASE("scoring ignores record order") {
  auto recs = fixtures::planted_records().records;
  const auto want = metrics_to_json(score_generations(recs)).dump();
  std::mt19937 gen(4);
  for (int i = 0; i < 3; ++i) {
    std::shuffle(recs.begin(), recs.end(), gen);
    CHECK(metrics_to_json(score_generations(recs)).dump() == want);
  }
}

TEST_CASE("bias contrasts") {
  std::vector<ParticipantAccuracy> same(4, participant("p", 0.7, 0.7, 0.7, 0.7));
  auto r = bias_report(same);
  CHECK(r.max_utilization.mean_delta == 0.0);
  CHECK(r.transparency.mean_delta == 0.0);
  REQUIRE(r.max_utilization.t.has_value());
  CHECK(*r.max_utilization.t == 0.0);

  std::vector<ParticipantAccuracy> util(3, participant("q", 1.0, 0.5, 0.5, 1.0));
  r = bias_report(util);
  CHECK(r.max_utilization.mean_delta == doctest::Approx(0.5));
  CHECK(r.transparency.mean_delta == doctest::Approx(0.0));
  CHECK_FALSE(r.max_utilization.t.has_value());

  const std::vector<ParticipantAccuracy> five = {
      participant("a", 1.0, 0.5, 0.75, 0.875), participant("b", 0.875, 0.75, 0.75, 1.0),
      participant("c", 0.625, 0.625, 0.5, 0.75), participant("d", 1.0, 1.0, 0.875, 0.875),
      participant("e", 0.75, 0.5, 0.625, 1.0)};
  std::vector<double> d;
  for (const auto& p : five) {
    const auto& a = p.accuracy;
    d.push_back((a.at(ConditionTag::kFeeding) + a.at(ConditionTag::kCounterBleeding)) / 2 -
                (a.at(ConditionTag::kBleeding) + a.at(ConditionTag::kCounterFeeding)) / 2);
  }
  double mean = 0;
  for (double x : d) mean += x / 5;
  double ss = 0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double t = mean / (std::sqrt(ss / 4) / std::sqrt(5.0));
  r = bias_report(five);
  CHECK(r.max_utilization.df == 4);
  CHECK(r.max_utilization.mean_delta == doctest::Approx(mean));
  CHECK(*r.max_utilization.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(*r.max_utilization.p_two_sided > 0.0);
  CHECK(*r.max_utilization.p_two_sided < 1.0);

  auto missing = five;
  missing[2].accuracy.erase(ConditionTag::kBleeding);
  try {
    bias_report(missing);
    FAIL("expected a missing-condition error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("participant c") != std::string::npos);
  }
}

TEST_CASE("log-likelihood") {
  const fixtures::Triplet t;
  const auto tag = ConditionTag::kFeeding;
  auto rec = make_record("g", tag, t.input(tag, 0), t.order(tag), std::nullopt);
  rec.produced = rec.expected;
  const auto toks = serialize_car(t.g, *rec.produced);
  REQUIRE(toks.size() == 11);

  rec.token_logprobs = std::vector<double>(toks.size(), 0.0);
  std::vector<GenerationRecord> one = {rec};
  CHECK(loglik_report(one).mean == 0.0);

  rec.produced = t.input(tag, 0).without(PartKind::kLights);
  rec.produced_tokens = serialize_car(t.g, *rec.produced);
  REQUIRE(rec.produced_tokens->size() == 6);
  rec.produced_tokens->pop_back();
  rec.token_logprobs = std::vector<double>(5, -0.1);
  one = {rec};
  CHECK(loglik_report(one).mean == doctest::Approx(-0.5));

  rec.token_logprobs->push_back(-1.0);
  one = {rec};
  CHECK_THROWS_AS(loglik_report(one), Error);
}

TEST_CASE("log-likelihood matches a recomputation from raw probabilities") {
  const fixtures::Triplet t;
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> prob(0.05, 1.0);
  std::vector<GenerationRecord> recs;
  std::vector<double> direct;
  for (int i = 0; i < 10; ++i) {
    const auto tag = kComposedTags[i % 4];
    auto rec = make_record("g" + std::to_string(i % 3), tag, t.input(tag, i), t.order(tag),
                           std::nullopt);
    rec.produced = rec.expected;
    const auto n = serialize_car(t.g, *rec.produced).size();
    std::vector<double> lp;
    double product = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = prob(gen);
      product *= p;
      lp.push_back(std::log(p));
    }
    rec.token_logprobs = lp;
    direct.push_back(std::log(product));
    recs.push_back(rec);
  }
  double want = 0;
  for (double x : direct) want += x / 10;
  const auto r = loglik_report(recs);
  CHECK(std::abs(r.mean - want) < 1e-9);
  const auto m = score_generations(recs);
  REQUIRE(m.loglik.has_value());
  CHECK(std::abs(m.loglik->mean - want) < 1e-9);
  CHECK(format_metrics_table({{"model", m}}).find("LogLik") != std::string::npos);
}
