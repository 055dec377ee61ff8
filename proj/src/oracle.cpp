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

#include "carfn/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace carfn {
namespace {

constexpr std::array<std::string_view, 6> kTagNames = {
    "single-valid", "single-invalid", "F", "CF", "BL", "CBL"};

bool targets(std::span<const FunctionDef> fs, PartKind k) {
  return std::any_of(fs.begin(), fs.end(),
                     [k](const FunctionDef& f) { return f.target() == k; });
}

}  // namespace

std::string_view tag_name(ConditionTag t) {
  return kTagNames[static_cast<std::size_t>(t)];
}

std::optional<ConditionTag> tag_from_name(std::string_view s) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == s) return static_cast<ConditionTag>(i);
  }
  return std::nullopt;
}

CarTree compose(std::span<const FunctionDef> fs, const CarTree& car) {
  if (fs.empty() || fs.size() > 2) {
    throw std::invalid_argument("compose: expected 1 or 2 functions");
  }
  CarTree out = car;
  for (const auto& f : fs) out = apply(f, out);
  return out;
}

CarTree compose(const FunctionDef& first, const FunctionDef& second,
                const CarTree& car) {
  return apply(second, apply(first, car));
}

std::vector<PartDiff> key_transformation(const FunctionDef& first,
                                         const FunctionDef& second,
                                         const CarTree& car) {
  return diff_cars(car, compose(first, second, car));
}

std::string ErrorLabel::name() const {
  switch (kind) {
    case ErrorKind::kCorrect: return "correct";
    case ErrorKind::kInputCopying: return "input_copying";
    case ErrorKind::kFeatureMismatch: return "feature_mismatch";
    case ErrorKind::kOther: return "other";
    case ErrorKind::kFunctionMismatch:
      switch (mismatch) {
        case Mismatch::kOnlyFirst: return "function_mismatch:only_first";
        case Mismatch::kOnlySecond: return "function_mismatch:only_second";
        case Mismatch::kOrderReversed: return "function_mismatch:order_reversed";
        case Mismatch::kNone: break;
      }
      return "function_mismatch";
  }
  return "other";
}

GenerationRecord make_record(std::string group, ConditionTag condition,
                             const CarTree& input,
                             std::vector<FunctionDef> functions,
                             std::optional<CarTree> produced) {
  GenerationRecord rec;
  rec.group = std::move(group);
  rec.condition = condition;
  rec.input = input;
  rec.expected = compose(functions, input);
  rec.functions = std::move(functions);
  rec.produced = std::move(produced);
  return rec;
}

ErrorLabel classify_error(const GenerationRecord& rec) {
  if (!rec.produced) return {ErrorKind::kOther};
  const CarTree& produced = *rec.produced;
  const CarTree& input = rec.input;
  if (produced == rec.expected) return {ErrorKind::kCorrect};

  std::vector<std::pair<Mismatch, CarTree>> mismatches;
  if (rec.functions.size() == 2) {
    const auto& a = rec.functions[0];
    const auto& b = rec.functions[1];
    mismatches = {{Mismatch::kOnlyFirst, apply(a, input)},
                  {Mismatch::kOnlySecond, apply(b, input)},
                  {Mismatch::kOrderReversed, compose(b, a, input)}};
  }

  if (produced == input) {
    ErrorLabel label{ErrorKind::kInputCopying};
    label.ambiguous = std::any_of(mismatches.begin(), mismatches.end(),
                                  [&](const auto& m) { return m.second == input; });
    return label;
  }
  for (const auto& [kind, outcome] : mismatches) {
    if (produced == outcome) return {ErrorKind::kFunctionMismatch, kind};
  }

  // The key transformation is fully present and everything else changed sits
  // on parts no function touches.
  const auto key = diff_cars(input, rec.expected);
  const auto actual = diff_cars(input, produced);
  const bool key_present = std::all_of(key.begin(), key.end(), [&](const PartDiff& d) {
    return std::find(actual.begin(), actual.end(), d) != actual.end();
  });
  if (key_present) {
    bool extras_off_target = true;
    for (const auto& d : actual) {
      if (std::find(key.begin(), key.end(), d) != key.end()) continue;
      if (targets(rec.functions, d.kind)) extras_off_target = false;
    }
    if (extras_off_target) return {ErrorKind::kFeatureMismatch};
  }
  return {ErrorKind::kOther};
}

}  // namespace carfn
