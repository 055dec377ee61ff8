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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carfn/car.hpp"
#include "carfn/function.hpp"

namespace carfn {

// What a query probes: a single function on a valid or invalid input, or one
// of the four ordered-composition conditions.
enum class ConditionTag : std::uint8_t {
  kSingleValid,
  kSingleInvalid,
  kFeeding,
  kCounterFeeding,
  kBleeding,
  kCounterBleeding,
};

inline constexpr std::array<ConditionTag, 4> kComposedTags = {
    ConditionTag::kFeeding, ConditionTag::kCounterFeeding,
    ConditionTag::kBleeding, ConditionTag::kCounterBleeding};

std::string_view tag_name(ConditionTag t);  // single-valid, ..., F, CF, BL, CBL
std::optional<ConditionTag> tag_from_name(std::string_view s);
inline bool is_composed(ConditionTag t) {
  return t != ConditionTag::kSingleValid && t != ConditionTag::kSingleInvalid;
}

// Left-to-right application, identity on invalid inputs at each step.
// Requires 1 or 2 functions.
CarTree compose(std::span<const FunctionDef> fs, const CarTree& car);
CarTree compose(const FunctionDef& first, const FunctionDef& second,
                const CarTree& car);

// Net change a correct composition of `first` then `second` makes.
std::vector<PartDiff> key_transformation(const FunctionDef& first,
                                         const FunctionDef& second,
                                         const CarTree& car);

enum class ErrorKind : std::uint8_t {
  kCorrect,
  kFunctionMismatch,
  kInputCopying,
  kFeatureMismatch,
  kOther,
};

enum class Mismatch : std::uint8_t {
  kNone,
  kOnlyFirst,
  kOnlySecond,
  kOrderReversed,
};

struct ErrorLabel {
  ErrorKind kind = ErrorKind::kOther;
  Mismatch mismatch = Mismatch::kNone;
  // Set on input copies that coincide with a one-function or reversed-order
  // outcome.
  bool ambiguous = false;

  // "correct", "function_mismatch:only_first", "input_copying", ...
  std::string name() const;
  friend bool operator==(const ErrorLabel&, const ErrorLabel&) = default;
};

struct GenerationRecord {
  // Unit for standard errors: participant id, or episode id for model runs.
  std::string group;
  std::string episode_id;
  std::string query_id;
  ConditionTag condition = ConditionTag::kSingleValid;
  CarTree input;
  // Application order; handles included.
  std::vector<FunctionDef> functions;
  CarTree expected;
  // nullopt when the generation did not parse as a car.
  std::optional<CarTree> produced;
  // Token sequence the log-probabilities refer to; defaults to the
  // serialization of `produced`.
  std::optional<TokenSeq> produced_tokens;
  std::optional<std::vector<double>> token_logprobs;
};

// Builds a record with `expected` from the oracle.
GenerationRecord make_record(std::string group, ConditionTag condition,
                             const CarTree& input,
                             std::vector<FunctionDef> functions,
                             std::optional<CarTree> produced);

// Precedence: correct, input copying, function mismatch (only first, only
// second, order reversed), feature mismatch, other. Malformed generations are
// `other`. Works for one-function records too, which never receive a
// function mismatch.
ErrorLabel classify_error(const GenerationRecord& rec);

}  // namespace carfn
