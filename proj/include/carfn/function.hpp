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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "carfn/car.hpp"
#include "json.hpp"

namespace carfn {

// Precondition on a single part. A present-condition may pin the part's type
// and/or color; an unpinned filter matches anything.
struct Condition {
  PartKind target = PartKind::kWindow;
  bool present = false;
  std::optional<PartType> type_filter;
  std::optional<Color> color_filter;

  static Condition absent(PartKind k) { return {k, false, {}, {}}; }
  static Condition present_with(PartKind k, std::optional<PartType> t = {},
                                std::optional<Color> c = {}) {
    return {k, true, t, c};
  }

  bool holds(const CarTree& car) const;
  friend bool operator==(const Condition&, const Condition&) = default;
};

enum class TransformKind : std::uint8_t { kAdd, kRemove, kPaint, kEditPart };

inline constexpr std::array<TransformKind, 4> kAllTransformKinds = {
    TransformKind::kAdd, TransformKind::kRemove, TransformKind::kPaint,
    TransformKind::kEditPart};

std::string_view transform_keyword(TransformKind k);  // "ADD", ...
std::string_view transform_name(TransformKind k);     // "add", ...

struct AddPart {
  PartSpec spec;
  friend bool operator==(const AddPart&, const AddPart&) = default;
};
struct RemovePart {
  friend bool operator==(const RemovePart&, const RemovePart&) = default;
};
struct PaintPart {
  Color color;
  friend bool operator==(const PaintPart&, const PaintPart&) = default;
};
struct EditPart {
  PartType type;
  friend bool operator==(const EditPart&, const EditPart&) = default;
};

struct Transform {
  PartKind target = PartKind::kWindow;
  std::variant<AddPart, RemovePart, PaintPart, EditPart> op;

  TransformKind kind() const {
    return static_cast<TransformKind>(op.index());
  }
  friend bool operator==(const Transform&, const Transform&) = default;
};

// A conditioned single-part edit. `handle` names the function inside an
// episode (fA/fB/fC) or the function pool (fn0000...); it takes no part in
// the function's behavior.
struct FunctionDef {
  std::string handle;
  Condition condition;
  Transform transform;

  PartKind target() const { return transform.target; }
  TransformKind kind() const { return transform.kind(); }

  friend bool operator==(const FunctionDef&, const FunctionDef&) = default;
};

// Same condition and transform, ignoring handles.
inline bool same_rule(const FunctionDef& a, const FunctionDef& b) {
  return a.condition == b.condition && a.transform == b.transform;
}

// Throws Error if the definition breaks a structural invariant or uses
// values outside the grammar.
void check_function(const Grammar& g, const FunctionDef& f);

// True iff no car in the grammar is changed by `f`.
bool is_degenerate(const Grammar& g, const FunctionDef& f);

bool is_valid_input(const FunctionDef& f, const CarTree& car);

// Identity on invalid inputs.
CarTree apply(const FunctionDef& f, const CarTree& car);

// Like apply, but reports invalid inputs as nullopt instead of passing the
// car through.
std::optional<CarTree> apply_strict(const FunctionDef& f, const CarTree& car);

// ---- enumeration ----------------------------------------------------------

struct FunctionEnumOptions {
  // Keep only the first of any functions that behave identically on every
  // car (same condition set and same outputs).
  bool dedup_extensional = false;
};

// Every distinct non-degenerate function of the grammar, ordered by part,
// then transform kind, then condition filters, then transform argument.
// Handles are assigned as fn0000, fn0001, ...
std::vector<FunctionDef> enumerate_functions(const Grammar& g,
                                             FunctionEnumOptions opts = {});

std::string pool_handle(std::size_t index);

// ---- DSL ------------------------------------------------------------------

// Canonical form, e.g. `PAINT WINDOW GREEN IF WINDOW PRESENT TYPE ANY COLOR
// NONE`. Present-conditions always carry both filter clauses.
std::string serialize_function(const Grammar& g, const FunctionDef& f);

// Parses one DSL line. Omitted TYPE/COLOR clauses mean ANY. Throws ParseError
// with the given line number and a 1-based column.
FunctionDef parse_function(const Grammar& g, std::string_view text,
                           std::size_t line = 1);

// Parses a function file: one definition per line, `#` starts a comment,
// blank lines ignored. Handles are fn0000... in file order unless a line is
// prefixed with `<handle>:`.
std::vector<FunctionDef> parse_function_file(const Grammar& g,
                                             std::string_view text);
std::string format_function_file(const Grammar& g,
                                 const std::vector<FunctionDef>& fs);

nlohmann::json function_to_json(const Grammar& g, const FunctionDef& f);
FunctionDef function_from_json(const Grammar& g, const nlohmann::json& j);

// Count of functions per transform kind for `fs`.
std::map<TransformKind, std::size_t> count_by_kind(
    const std::vector<FunctionDef>& fs);

}  // namespace carfn
