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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "carfn/car.hpp"
#include "carfn/function.hpp"

namespace carfn {

enum class Relation : std::uint8_t { kNone, kFeeds, kBleeds };

// How a relation is quantified over inputs:
//  - existential: some car on which f is valid witnesses it;
//  - universal: the witnessing condition holds on every car in the
//    relation's domain (f valid and g invalid for feeding, f and g both valid
//    for bleeding), and that domain is nonempty.
enum class Quantifier : std::uint8_t { kExistential, kUniversal };

std::string_view relation_name(Relation r);  // "none", "feeds", "bleeds"
std::optional<Relation> relation_from_name(std::string_view s);
std::string_view quantifier_name(Quantifier q);  // "existential", "universal"
std::optional<Quantifier> quantifier_from_name(std::string_view s);

// f creates g's context on `car`: f valid, g invalid, g valid after f and
// changing f's output.
bool feeds_on(const FunctionDef& f, const FunctionDef& g, const CarTree& car);
// f destroys g's context on `car`: f valid, g valid and changing `car`, g
// invalid after f.
bool bleeds_on(const FunctionDef& f, const FunctionDef& g, const CarTree& car);
bool witnesses(Relation r, const FunctionDef& f, const FunctionDef& g,
               const CarTree& car);

inline constexpr std::size_t kDefaultWitnessCap = 16;

struct InteractionLabel {
  Relation relation = Relation::kNone;
  Quantifier quantifier = Quantifier::kUniversal;
  // Cars witnessing `relation`, canonical order, at most the cap.
  std::vector<CarTree> witnesses;
  // Total number of witnessing cars in the grammar.
  std::uint64_t witness_count = 0;
};

// Exhaustive sweep over every car of the grammar. The relations are defined
// between two different functions, so a pair with identical rules is `none`.
// Feeding and bleeding cannot both hold for single-part edits; feeding is
// reported if they ever did.
InteractionLabel classify_pair(const Grammar& g, const FunctionDef& f,
                               const FunctionDef& h, Quantifier q,
                               std::size_t witness_cap = kDefaultWitnessCap);

// Both quantifiers at once, computed on the target slots only. Validity and
// edits depend on the target slot alone, so sweeping the states of that slot
// and scaling counts by the size of the untouched slots gives exactly the
// full-sweep result.
struct PairSummary {
  Relation existential = Relation::kNone;
  Relation universal = Relation::kNone;
  std::uint64_t witness_count = 0;  // witnesses of `existential`
  // On every witness, f still applies when g acts first. Always true for
  // feeding; false for bleeding pairs whose counter order blocks f.
  bool counter_fires = false;
};

PairSummary summarize_pair(const Grammar& g, const FunctionDef& f,
                           const FunctionDef& h);

// First k witnesses of `r` in canonical order. Throws ExhaustedPoolError
// carrying the census count when fewer than k exist.
std::vector<CarTree> witness_inputs(const Grammar& g, const FunctionDef& f,
                                    const FunctionDef& h, Relation r,
                                    std::size_t k);

struct FunctionTriplet {
  FunctionDef a;  // feeds b
  FunctionDef b;
  FunctionDef c;  // bleeds b
};

struct TripletFilter {
  // Require A, B and C to use three different transform kinds.
  bool distinct_transform_kinds = false;
};

class Rng;

// Pairwise relation table over a function pool, built once and shared by the
// pair and triplet samplers.
class InteractionIndex {
 public:
  InteractionIndex(const Grammar& g, std::vector<FunctionDef> pool,
                   Quantifier q, std::size_t workers = 1);

  const std::vector<FunctionDef>& pool() const { return pool_; }
  Quantifier quantifier() const { return quantifier_; }
  std::size_t size() const { return pool_.size(); }

  const PairSummary& summary(std::size_t i, std::size_t j) const {
    return table_[i * pool_.size() + j];
  }
  Relation relation(std::size_t i, std::size_t j) const;

  // Ordered pairs (i, j) with pool[i] `r` pool[j] and a counter order in
  // which both functions act, in index order.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs(
      Relation r) const;

  // Uniform over qualifying pairs. Throws ExhaustedPoolError if none.
  std::pair<FunctionDef, FunctionDef> sample_pair(Rng& rng, Relation r) const;

  // Uniform over valid triplets. Throws ExhaustedPoolError if none.
  FunctionTriplet sample_triplet(Rng& rng, const TripletFilter& filter = {}) const;
  std::uint64_t triplet_count(const TripletFilter& filter = {}) const;

 private:
  std::vector<std::uint64_t> triplet_weights(const TripletFilter& filter) const;

  std::vector<FunctionDef> pool_;
  Quantifier quantifier_;
  std::vector<PairSummary> table_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> feeds_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bleeds_;
  std::vector<std::vector<std::uint32_t>> feeders_;   // by b
  std::vector<std::vector<std::uint32_t>> bleeders_;  // by b
};

std::pair<FunctionDef, FunctionDef> sample_interacting_pair(
    const Grammar& g, std::uint64_t seed, Relation r,
    const std::vector<FunctionDef>& pool,
    Quantifier q = Quantifier::kUniversal);

FunctionTriplet sample_triplet(const Grammar& g, std::uint64_t seed,
                               const std::vector<FunctionDef>& pool,
                               Quantifier q = Quantifier::kUniversal,
                               const TripletFilter& filter = {});

struct InteractionRow {
  std::string handle_f;
  std::string handle_g;
  PairSummary summary;
};

// Header: handle_f,handle_g,relation_existential,relation_universal,witness_count
void write_interaction_csv(std::ostream& out,
                           const std::vector<InteractionRow>& rows);

}  // namespace carfn
