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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carfn/episode.hpp"
#include "carfn/interaction.hpp"
#include "json.hpp"

namespace carfn {

// Counts of the three-function experiment: training cars seen per function,
// single-function probes per function and probes per composition condition.
struct ExperimentShape {
  static constexpr std::size_t kValidTraining = 6;
  static constexpr std::size_t kInvalidTraining = 3;
  static constexpr std::size_t kTraining = kValidTraining + kInvalidTraining;
  static constexpr std::size_t kSinglesPerFunction = 3;  // familiar, novel, identity
  static constexpr std::size_t kComposedPerCondition = 8;
  // Per episode (two functions).
  static constexpr std::size_t kEpisodeSupports = 2 * kTraining;
  static constexpr std::size_t kEpisodeSingles = 2 * kSinglesPerFunction;
  static constexpr std::size_t kEpisodeComposed = 2 * kComposedPerCondition;
};

// One pre-generated triplet with the stimuli every participant assigned to
// it sees. Function handles are fA, fB, fC.
struct ExperimentProtocol {
  std::string id;
  std::uint64_t seed = 0;
  FunctionTriplet triplet;
  std::vector<SupportExample> training;  // 9 per function, grouped by handle
  std::vector<Query> probes;             // oracle targets

  std::vector<FunctionDef> functions() const {
    return {triplet.a, triplet.b, triplet.c};
  }
  const FunctionDef& function(std::string_view handle) const;
};

// Training cars: 6 valid + 3 invalid per function. Single probes per
// function: one familiar (a valid training input), one novel valid, one
// invalid. Composed probes: 8 feeding witnesses of (A, B) for each of F and
// CF, 8 bleeding witnesses of (C, B) for each of BL and CBL.
ExperimentProtocol make_protocol(const Grammar& g, std::span<const CarTree> cars,
                                 FunctionTriplet triplet, std::uint64_t seed,
                                 std::string id);

// `count` distinct triplets (by rules) drawn from the index's pool.
std::vector<ExperimentProtocol> make_experiment(const Grammar& g,
                                                std::span<const CarTree> cars,
                                                const InteractionIndex& index,
                                                std::uint64_t seed,
                                                std::size_t count,
                                                const TripletFilter& filter = {});

nlohmann::json protocol_to_json(const Grammar& g, const ExperimentProtocol& p);
ExperimentProtocol protocol_from_json(const Grammar& g, const nlohmann::json& j);

// All functions used by the protocols, first occurrence order.
std::vector<FunctionDef> experiment_functions(std::span<const ExperimentProtocol> ps);

// ---- trial logs -----------------------------------------------------------

// One participant generation. `condition` is F, CF, BL, CBL or
// single:<handle>.
struct TrialRow {
  std::string participant_id;
  std::string triplet_id;
  std::string condition;
  CarTree input;
  CarTree produced;
};

// CSV with header participant_id,triplet_id,condition,input_car,produced_car;
// car columns hold the structured JSON form.
std::string trial_log_to_csv(const Grammar& g, std::span<const TrialRow> rows);
// Throws MalformedInputError with the 0-based data row index.
std::vector<TrialRow> trial_log_from_csv(const Grammar& g, std::string_view text);

// Noise model for synthetic participants. Accuracies are per condition; an
// incorrect generation picks an error type by `error_mix` weight.
struct SurrogateModel {
  std::map<ConditionTag, double> accuracy = {
      {ConditionTag::kSingleValid, 0.954},  {ConditionTag::kSingleInvalid, 0.954},
      {ConditionTag::kFeeding, 0.858},      {ConditionTag::kCounterFeeding, 0.863},
      {ConditionTag::kBleeding, 0.863},     {ConditionTag::kCounterBleeding, 0.888}};
  double function_mismatch = 0.60;
  double input_copying = 0.25;
  double feature_mismatch = 0.15;
};

// Synthetic log: participant i is assigned a protocol uniformly at random and
// answers every probe of it.
std::vector<TrialRow> make_surrogate_log(const Grammar& g,
                                         std::span<const ExperimentProtocol> protocols,
                                         std::size_t participants, std::uint64_t seed,
                                         const SurrogateModel& model = {});

// Two episodes per participant: F/CF over (fA, fB) and BL/CBL over (fC, fB).
// Without a log, one synthetic participant with oracle targets. With a log,
// every participant of this protocol becomes a pair of episodes whose query
// inputs and targets are the logged ones.
std::vector<Episode> gen_experiment_episodes(const Grammar& g,
                                             const ExperimentProtocol& protocol,
                                             const std::vector<TrialRow>* log = nullptr);

Corpus gen_experiment_corpus(const Grammar& g, std::span<const ExperimentProtocol> protocols,
                             const std::vector<TrialRow>* log, const CorpusSplit& split,
                             std::uint64_t seed, Quantifier q);

}  // namespace carfn
