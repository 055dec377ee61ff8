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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carfn/car.hpp"
#include "carfn/function.hpp"
#include "carfn/interaction.hpp"
#include "carfn/oracle.hpp"
#include "json.hpp"

namespace carfn {

inline constexpr int kEpisodeSchemaVersion = 1;

enum class Provenance : std::uint8_t { kBaseTrain, kBaseVal, kHuman, kSynthetic };
std::string_view provenance_name(Provenance p);  // base-train, base-val, H, S
std::optional<Provenance> provenance_from_name(std::string_view s);

// Which ordered-composition pair an episode probes.
enum class Family : std::uint8_t { kFeeding, kBleeding };
std::string_view family_name(Family f);  // "F/CF", "BL/CBL"
std::optional<Family> family_from_name(std::string_view s);
inline Relation family_relation(Family f) {
  return f == Family::kFeeding ? Relation::kFeeds : Relation::kBleeds;
}

struct SupportExample {
  CarTree input;
  std::string handle;
  CarTree output;
  bool valid = false;
};

struct Query {
  std::string id;
  CarTree input;
  std::vector<std::string> handles;
  CarTree target;
  ConditionTag condition = ConditionTag::kSingleValid;
  // Target is the reversed-order composition (noisy corpora).
  bool flipped = false;
  // Target is a recorded participant generation.
  bool human = false;
};

struct Episode {
  std::string id;
  Provenance provenance = Provenance::kBaseTrain;
  Family family = Family::kFeeding;
  // Handles fA, fB (and fC for experiment episodes).
  std::vector<FunctionDef> functions;
  std::vector<SupportExample> supports;
  std::vector<Query> queries;
  std::uint64_t seed = 0;
  // Participant id for experiment episodes, otherwise empty.
  std::string group;

  const FunctionDef& function(std::string_view handle) const;
  std::vector<FunctionDef> resolve(std::span<const std::string> handles) const;
};

nlohmann::json episode_to_json(const Grammar& g, const Episode& e);
Episode episode_from_json(const Grammar& g, const nlohmann::json& j);

// Inputs on which `f` is valid and changes the car.
bool is_effective_input(const FunctionDef& f, const CarTree& car);

// ---- function split -------------------------------------------------------

struct CorpusSplit {
  std::vector<FunctionDef> train;
  std::vector<FunctionDef> validation;
  std::vector<FunctionDef> withheld;
};

// Removes `withheld` (matched by rule) from the pool, then puts
// round(val_fraction * remaining) functions into validation. Each list keeps
// pool order.
CorpusSplit split_functions(std::uint64_t seed, const std::vector<FunctionDef>& pool,
                            const std::vector<FunctionDef>& withheld,
                            double val_fraction);

nlohmann::json split_to_json(const Grammar& g, const CorpusSplit& s);
CorpusSplit split_from_json(const Grammar& g, const nlohmann::json& j);

// ---- base episodes --------------------------------------------------------

// Per function: supports and single-function queries; plus composed queries
// per order.
struct BaseShape {
  static constexpr std::size_t kValidSupports = 6;
  static constexpr std::size_t kInvalidSupports = 4;
  static constexpr std::size_t kValidSingles = 2;
  static constexpr std::size_t kInvalidSingles = 2;
  static constexpr std::size_t kComposedPerOrder = 2;
  static constexpr std::size_t kSupports = 2 * (kValidSupports + kInvalidSupports);
  static constexpr std::size_t kQueries =
      2 * (kValidSingles + kInvalidSingles) + 2 * kComposedPerOrder;
};

// Draws episodes from a function pool. `cars` must be the full enumeration of
// the grammar.
class EpisodeSampler {
 public:
  EpisodeSampler(const Grammar& g, std::span<const CarTree> cars,
                 const InteractionIndex& index);

  // A and B satisfy the family's relation (A feeds B, or A bleeds B); queries
  // fAfB carry F or BL, fBfA carry CF or CBL.
  Episode sample(std::uint64_t seed, Family family, Provenance provenance,
                 std::string id) const;

 private:
  const Grammar& g_;
  std::span<const CarTree> cars_;
  const InteractionIndex& index_;
};

Episode gen_base_episode(const Grammar& g, std::uint64_t seed,
                         const CorpusSplit& split, Family family,
                         Quantifier q = Quantifier::kUniversal);

// ---- corpora --------------------------------------------------------------

struct CorpusHeader {
  int schema_version = kEpisodeSchemaVersion;
  Provenance provenance = Provenance::kBaseTrain;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  double p_flip = 0.0;
  Quantifier quantifier = Quantifier::kUniversal;
  Grammar grammar;
  CorpusSplit split;
};

nlohmann::json header_to_json(const CorpusHeader& h);
CorpusHeader header_from_json(const nlohmann::json& j);

struct Corpus {
  CorpusHeader header;
  std::vector<Episode> episodes;
};

// ceil(n/2) feeding and floor(n/2) bleeding episodes in a seeded order.
// Train provenance draws from split.train, validation from split.validation.
// Requires n >= 2.
Corpus gen_base_corpus(const Grammar& g, std::uint64_t seed,
                       const CorpusSplit& split, std::size_t n,
                       Provenance provenance = Provenance::kBaseTrain,
                       Quantifier q = Quantifier::kUniversal,
                       std::size_t workers = 1);

// Base training corpus whose composed-query targets are replaced, each with
// probability p_flip, by the reversed-order composition. Episode content is
// drawn exactly as in gen_base_corpus; flips come from a separate stream. A
// zero-noise corpus is the base corpus itself, provenance included.
Corpus gen_noisy_corpus(const Grammar& g, std::uint64_t seed,
                        const CorpusSplit& split, std::size_t n, double p_flip,
                        Quantifier q = Quantifier::kUniversal,
                        std::size_t workers = 1);

// JSONL: header record, then one episode per line.
std::string corpus_to_jsonl(const Corpus& c);
Corpus corpus_from_jsonl(std::string_view text);
void write_corpus(const std::string& path, const Corpus& c);
Corpus read_corpus(const std::string& path);

// ---- model encoding -------------------------------------------------------

struct EncodedRecord {
  std::string episode_id;
  std::string query_id;
  std::size_t support_index = 0;
  // support `car -> h -> car`, `|`, query stem `car -> h [h] ->`
  TokenSeq input_tokens;
  TokenSeq target_tokens;
};

// One record per (query, support) pair, query-major.
std::vector<EncodedRecord> encode_episode(const Grammar& g,
                                          const Vocabulary& vocab,
                                          const Episode& e);

// Car and handles of the query stem in an encoded input.
std::pair<CarTree, std::vector<std::string>> decode_query_stem(
    const Grammar& g, std::span<const std::string> input_tokens);

nlohmann::json encoded_to_json(const EncodedRecord& r);
void write_encoded(std::ostream& out, const Grammar& g, const Vocabulary& vocab,
                   const Corpus& c);

}  // namespace carfn
