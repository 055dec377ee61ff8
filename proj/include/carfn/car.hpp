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

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace carfn {

// Child slots of the car body. The enumerator order is the serialization
// order.
enum class PartKind : std::uint8_t { kWindow = 0, kTires = 1, kLights = 2 };

inline constexpr std::array<PartKind, 3> kAllPartKinds = {
    PartKind::kWindow, PartKind::kTires, PartKind::kLights};

constexpr std::size_t slot(PartKind k) { return static_cast<std::size_t>(k); }

std::string_view part_token(PartKind k);  // "WINDOW"
std::string_view part_name(PartKind k);   // "window"
std::optional<PartKind> part_from_token(std::string_view token);
std::optional<PartKind> part_from_name(std::string_view name);

// 1-based part shape.
struct PartType {
  std::uint8_t value = 1;
  friend constexpr auto operator<=>(PartType, PartType) = default;
};

// Index into the grammar's palette; index 0 is always the "no color" entry.
struct Color {
  std::uint8_t index = 0;
  friend constexpr auto operator<=>(Color, Color) = default;
};

inline constexpr Color kNoColor{0};

struct PartSpec {
  PartType type;
  Color color;
  friend constexpr auto operator<=>(const PartSpec&, const PartSpec&) = default;
};

// The stimulus domain: which parts exist, how many shapes each part has and
// the color palette. All counts derive from these values.
struct Grammar {
  std::vector<PartKind> parts{kAllPartKinds.begin(), kAllPartKinds.end()};
  int num_types = 3;
  std::vector<std::string> colors{"NONE",   "ORANGE", "SKY",      "GREEN",
                                  "YELLOW", "BLUE",   "VERMILION"};

  static Grammar standard() { return Grammar{}; }

  // Throws ConfigError on an unusable grammar.
  void validate() const;

  bool has_part(PartKind k) const;
  std::size_t num_colors() const { return colors.size(); }
  // Absent plus every (type, color) combination.
  std::size_t slot_states() const {
    return 1 + static_cast<std::size_t>(num_types) * colors.size();
  }
  // Closed-form size of the car space: slot_states ^ |parts|.
  std::uint64_t car_count() const;

  std::optional<Color> find_color(std::string_view name) const;
  Color color(std::string_view name) const;  // throws ConfigError
  const std::string& color_name(Color c) const;
  std::string type_token(PartType t) const;  // "T1"
  std::optional<PartType> find_type_token(std::string_view token) const;

  // Slot-state code: 0 = absent, else 1 + (type-1) * |colors| + color.
  std::size_t encode_slot(const std::optional<PartSpec>& spec) const;
  std::optional<PartSpec> decode_slot(std::size_t code) const;

  friend bool operator==(const Grammar&, const Grammar&) = default;
};

void to_json(nlohmann::json& j, const Grammar& g);
void from_json(const nlohmann::json& j, Grammar& g);

// A car body with at most one part per kind. Ordering is the canonical
// enumeration order: slots compared window first, absent before present,
// then by type, then by color.
class CarTree {
 public:
  CarTree() = default;

  const std::optional<PartSpec>& part(PartKind k) const {
    return parts_[slot(k)];
  }
  bool has(PartKind k) const { return parts_[slot(k)].has_value(); }
  std::size_t part_count() const;

  void set(PartKind k, std::optional<PartSpec> spec) {
    parts_[slot(k)] = spec;
  }
  CarTree with(PartKind k, PartSpec spec) const;
  CarTree without(PartKind k) const;

  friend auto operator<=>(const CarTree&, const CarTree&) = default;

 private:
  std::array<std::optional<PartSpec>, 3> parts_{};
};

// ---- enumeration and sampling ---------------------------------------------

// Position of `car` in the canonical order. The car must be expressible in
// the grammar.
std::uint64_t car_index(const Grammar& g, const CarTree& car);
CarTree car_at(const Grammar& g, std::uint64_t index);

// True iff the car uses only the grammar's parts, types and colors.
bool in_grammar(const Grammar& g, const CarTree& car);

// Every distinct car exactly once, in canonical order.
std::vector<CarTree> enumerate_cars(const Grammar& g);
void for_each_car(const Grammar& g,
                  const std::function<void(const CarTree&)>& visit);

using CarPredicate = std::function<bool(const CarTree&)>;

class Rng;

// Uniform over cars satisfying `constraint` (all cars when empty). Throws
// UnsatisfiableError when nothing matches.
CarTree sample_car(const Grammar& g, std::uint64_t seed,
                   const CarPredicate& constraint = {});
CarTree sample_car(std::span<const CarTree> space, Rng& rng,
                   const CarPredicate& constraint = {});

// ---- token form -----------------------------------------------------------

using TokenSeq = std::vector<std::string>;

inline constexpr std::string_view kCarToken = "CAR";
inline constexpr std::string_view kOpenToken = "(";
inline constexpr std::string_view kCloseToken = ")";
inline constexpr std::string_view kArrowToken = "->";
inline constexpr std::string_view kPairSeparatorToken = "|";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kStartToken = "<sos>";
inline constexpr std::string_view kEndToken = "<eos>";
inline constexpr std::array<std::string_view, 3> kHandleTokens = {"fA", "fB",
                                                                  "fC"};

// `CAR ( WINDOW T1 NONE ) ( TIRES T2 GREEN )`; absent parts omitted.
TokenSeq serialize_car(const Grammar& g, const CarTree& car);
void append_car_tokens(const Grammar& g, const CarTree& car, TokenSeq& out);

// Parses a whole sequence. ParseError column is the 1-based token position.
CarTree parse_car(const Grammar& g, std::span<const std::string> tokens);
// Parses one car starting at `pos`, advancing `pos` past it.
CarTree parse_car_at(const Grammar& g, std::span<const std::string> tokens,
                     std::size_t& pos);

std::string join_tokens(std::span<const std::string> tokens);
TokenSeq split_tokens(std::string_view text);

// Closed token set for a grammar, in a fixed order.
class Vocabulary {
 public:
  static constexpr int kVersion = 1;

  explicit Vocabulary(const Grammar& g);

  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(std::string_view token) const;
  std::optional<std::size_t> id(std::string_view token) const;
  // Throws VocabularyError naming the first unknown token.
  void check(std::span<const std::string> seq) const;

  // One token per line after a `# carfn-vocab <version>` header line.
  std::string to_text() const;

 private:
  std::vector<std::string> tokens_;
};

// ---- structured form ------------------------------------------------------

// {"parts": {"window": {"type": 1, "color": "NONE"}, ...}}
nlohmann::json car_to_json(const Grammar& g, const CarTree& car);
CarTree car_from_json(const Grammar& g, const nlohmann::json& j);

std::string to_string(const Grammar& g, const CarTree& car);

// ---- differences ----------------------------------------------------------

enum class ChangeKind : std::uint8_t {
  kAdded,
  kRemoved,
  kRetyped,
  kRecolored,
  kRetypedAndRecolored,
};

std::string_view change_name(ChangeKind c);

// Change at a single slot; `before`/`after` are the slot contents.
struct PartDiff {
  PartKind kind;
  std::optional<PartSpec> before;
  std::optional<PartSpec> after;

  ChangeKind change() const;
  PartDiff inverted() const { return {kind, after, before}; }
  friend bool operator==(const PartDiff&, const PartDiff&) = default;
};

// One entry per differing slot, in slot order.
std::vector<PartDiff> diff_cars(const CarTree& a, const CarTree& b);
// Applies a patch produced by diff_cars. Throws Error if a diff's `before`
// does not match the car.
CarTree apply_diff(const CarTree& car, std::span<const PartDiff> diffs);

std::string to_string(const Grammar& g, const PartDiff& d);

}  // namespace carfn
