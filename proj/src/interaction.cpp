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

#include "carfn/interaction.hpp"

#include <ostream>

#include "carfn/error.hpp"
#include "carfn/parallel.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

// Domain sizes and witness counts of both relations for one pair.
struct Tally {
  std::uint64_t feed_domain = 0;
  std::uint64_t feed_witnesses = 0;
  std::uint64_t bleed_domain = 0;
  std::uint64_t bleed_witnesses = 0;
  // Witnesses on which f no longer applies once h has acted first.
  std::uint64_t feed_blocked = 0;
  std::uint64_t bleed_blocked = 0;

  void add(const FunctionDef& f, const FunctionDef& h, const CarTree& car,
           std::uint64_t weight) {
    if (!is_valid_input(f, car)) return;
    if (!is_valid_input(h, car)) {
      feed_domain += weight;
      if (feeds_on(f, h, car)) {
        feed_witnesses += weight;
        if (!is_valid_input(f, apply(h, car))) feed_blocked += weight;
      }
    } else {
      bleed_domain += weight;
      if (bleeds_on(f, h, car)) {
        bleed_witnesses += weight;
        if (!is_valid_input(f, apply(h, car))) bleed_blocked += weight;
      }
    }
  }

  Relation relation(Quantifier q) const {
    auto holds = [q](std::uint64_t domain, std::uint64_t wit) {
      return q == Quantifier::kExistential ? wit > 0
                                           : domain > 0 && wit == domain;
    };
    if (holds(feed_domain, feed_witnesses)) return Relation::kFeeds;
    if (holds(bleed_domain, bleed_witnesses)) return Relation::kBleeds;
    return Relation::kNone;
  }

  bool counter_fires(Relation r) const {
    switch (r) {
      case Relation::kFeeds: return feed_blocked == 0;
      case Relation::kBleeds: return bleed_blocked == 0;
      case Relation::kNone: return false;
    }
    return false;
  }

  std::uint64_t witnesses_of(Relation r) const {
    switch (r) {
      case Relation::kFeeds: return feed_witnesses;
      case Relation::kBleeds: return bleed_witnesses;
      case Relation::kNone: return 0;
    }
    return 0;
  }
};

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kNone: return "none";
    case Relation::kFeeds: return "feeds";
    case Relation::kBleeds: return "bleeds";
  }
  return "?";
}

std::optional<Relation> relation_from_name(std::string_view s) {
  for (Relation r : {Relation::kNone, Relation::kFeeds, Relation::kBleeds}) {
    if (relation_name(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view quantifier_name(Quantifier q) {
  return q == Quantifier::kExistential ? "existential" : "universal";
}

std::optional<Quantifier> quantifier_from_name(std::string_view s) {
  if (s == "existential") return Quantifier::kExistential;
  if (s == "universal") return Quantifier::kUniversal;
  return std::nullopt;
}

bool feeds_on(const FunctionDef& f, const FunctionDef& g, const CarTree& car) {
  if (!is_valid_input(f, car) || is_valid_input(g, car)) return false;
  const CarTree fed = apply(f, car);
  return is_valid_input(g, fed) && apply(g, fed) != fed;
}

bool bleeds_on(const FunctionDef& f, const FunctionDef& g, const CarTree& car) {
  return is_valid_input(f, car) && is_valid_input(g, car) && apply(g, car) != car &&
         !is_valid_input(g, apply(f, car));
}

bool witnesses(Relation r, const FunctionDef& f, const FunctionDef& g,
               const CarTree& car) {
  switch (r) {
    case Relation::kFeeds: return feeds_on(f, g, car);
    case Relation::kBleeds: return bleeds_on(f, g, car);
    case Relation::kNone: return false;
  }
  return false;
}

InteractionLabel classify_pair(const Grammar& g, const FunctionDef& f,
                               const FunctionDef& h, Quantifier q,
                               std::size_t witness_cap) {
  InteractionLabel label;
  label.quantifier = q;
  if (same_rule(f, h)) return label;
  Tally tally;
  for_each_car(g, [&](const CarTree& car) { tally.add(f, h, car, 1); });
  label.relation = tally.relation(q);
  label.witness_count = tally.witnesses_of(label.relation);
  if (label.relation != Relation::kNone && witness_cap > 0) {
    const std::uint64_t n = g.car_count();
    for (std::uint64_t i = 0; i < n && label.witnesses.size() < witness_cap; ++i) {
      const CarTree car = car_at(g, i);
      if (witnesses(label.relation, f, h, car)) label.witnesses.push_back(car);
    }
  }
  return label;
}

PairSummary summarize_pair(const Grammar& g, const FunctionDef& f,
                           const FunctionDef& h) {
  PairSummary out;
  // An edit of one slot never changes the validity of a function that
  // conditions on another slot.
  if (same_rule(f, h) || f.target() != h.target()) return out;
  std::uint64_t weight = 1;
  for (std::size_t i = 1; i < g.parts.size(); ++i) weight *= g.slot_states();
  Tally tally;
  for (std::size_t code = 0; code < g.slot_states(); ++code) {
    CarTree car;
    car.set(f.target(), g.decode_slot(code));
    tally.add(f, h, car, weight);
  }
  out.existential = tally.relation(Quantifier::kExistential);
  out.universal = tally.relation(Quantifier::kUniversal);
  out.witness_count = tally.witnesses_of(out.existential);
  out.counter_fires = tally.counter_fires(out.existential);
  return out;
}

std::vector<CarTree> witness_inputs(const Grammar& g, const FunctionDef& f,
                                    const FunctionDef& h, Relation r,
                                    std::size_t k) {
  std::vector<CarTree> out;
  std::uint64_t census = 0;
  if (!same_rule(f, h)) {
    for_each_car(g, [&](const CarTree& car) {
      if (!witnesses(r, f, h, car)) return;
      ++census;
      if (out.size() < k) out.push_back(car);
    });
  }
  if (out.size() < k) {
    throw ExhaustedPoolError("witness_inputs: requested " + std::to_string(k) +
                                 " witnesses of " +
                                 std::string(relation_name(r)) + ", census has " +
                                 std::to_string(census),
                             census);
  }
  return out;
}

// ---- InteractionIndex -----------------------------------------------------

InteractionIndex::InteractionIndex(const Grammar& g, std::vector<FunctionDef> pool,
                                   Quantifier q, std::size_t workers)
    : pool_(std::move(pool)), quantifier_(q) {
  const std::size_t n = pool_.size();
  table_.resize(n * n);
  parallel_for(n, workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      table_[i * n + j] = summarize_pair(g, pool_[i], pool_[j]);
    }
  });
  feeders_.resize(n);
  bleeders_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (!summary(i, j).counter_fires) continue;
      switch (relation(i, j)) {
        case Relation::kFeeds:
          feeds_.emplace_back(i, j);
          feeders_[j].push_back(i);
          break;
        case Relation::kBleeds:
          bleeds_.emplace_back(i, j);
          bleeders_[j].push_back(i);
          break;
        case Relation::kNone:
          break;
      }
    }
  }
}

Relation InteractionIndex::relation(std::size_t i, std::size_t j) const {
  const auto& s = summary(i, j);
  return quantifier_ == Quantifier::kExistential ? s.existential : s.universal;
}

const std::vector<std::pair<std::uint32_t, std::uint32_t>>&
InteractionIndex::pairs(Relation r) const {
  static const std::vector<std::pair<std::uint32_t, std::uint32_t>> kEmpty;
  if (r == Relation::kFeeds) return feeds_;
  if (r == Relation::kBleeds) return bleeds_;
  return kEmpty;
}

std::pair<FunctionDef, FunctionDef> InteractionIndex::sample_pair(
    Rng& rng, Relation r) const {
  const auto& p = pairs(r);
  if (p.empty()) {
    throw ExhaustedPoolError("no function pair in the pool " +
                             std::string(relation_name(r)) + " under " +
                             std::string(quantifier_name(quantifier_)) +
                             " quantification");
  }
  const auto [i, j] = p[rng.below(p.size())];
  return {pool_[i], pool_[j]};
}

std::vector<std::uint64_t> InteractionIndex::triplet_weights(
    const TripletFilter& filter) const {
  std::vector<std::uint64_t> w(pool_.size(), 0);
  for (std::size_t b = 0; b < pool_.size(); ++b) {
    if (!filter.distinct_transform_kinds) {
      w[b] = static_cast<std::uint64_t>(feeders_[b].size()) * bleeders_[b].size();
      continue;
    }
    for (auto a : feeders_[b]) {
      for (auto c : bleeders_[b]) {
        const auto ka = pool_[a].kind(), kb = pool_[b].kind(), kc = pool_[c].kind();
        if (ka != kb && kb != kc && ka != kc) ++w[b];
      }
    }
  }
  return w;
}

std::uint64_t InteractionIndex::triplet_count(const TripletFilter& filter) const {
  std::uint64_t total = 0;
  for (auto w : triplet_weights(filter)) total += w;
  return total;
}

FunctionTriplet InteractionIndex::sample_triplet(Rng& rng,
                                                 const TripletFilter& filter) const {
  const auto weights = triplet_weights(filter);
  std::uint64_t total = 0;
  for (auto w : weights) total += w;
  if (total == 0) {
    throw ExhaustedPoolError("no function triplet in the pool satisfies "
                             "A feeds B and C bleeds B");
  }
  const std::size_t b = rng.weighted(weights);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> choices;
  for (auto a : feeders_[b]) {
    for (auto c : bleeders_[b]) {
      const auto ka = pool_[a].kind(), kb = pool_[b].kind(), kc = pool_[c].kind();
      if (!filter.distinct_transform_kinds || (ka != kb && kb != kc && ka != kc)) {
        choices.emplace_back(a, c);
      }
    }
  }
  const auto [a, c] = choices[rng.below(choices.size())];
  return {pool_[a], pool_[b], pool_[c]};
}

std::pair<FunctionDef, FunctionDef> sample_interacting_pair(
    const Grammar& g, std::uint64_t seed, Relation r,
    const std::vector<FunctionDef>& pool, Quantifier q) {
  InteractionIndex index(g, pool, q);
  Rng rng(seed);
  return index.sample_pair(rng, r);
}

FunctionTriplet sample_triplet(const Grammar& g, std::uint64_t seed,
                               const std::vector<FunctionDef>& pool,
                               Quantifier q, const TripletFilter& filter) {
  InteractionIndex index(g, pool, q);
  Rng rng(seed);
  return index.sample_triplet(rng, filter);
}

void write_interaction_csv(std::ostream& out,
                           const std::vector<InteractionRow>& rows) {
  out << "handle_f,handle_g,relation_existential,relation_universal,"
         "witness_count\n";
  for (const auto& r : rows) {
    out << r.handle_f << ',' << r.handle_g << ','
        << relation_name(r.summary.existential) << ','
        << relation_name(r.summary.universal) << ',' << r.summary.witness_count
        << '\n';
  }
}

}  // namespace carfn
