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

#include "carfn/function.hpp"

#include <cctype>
#include <cstdio>
#include <set>

#include "carfn/error.hpp"

namespace carfn {
namespace {

constexpr std::array<std::string_view, 4> kKeywords = {"ADD", "REMOVE",
                                                       "PAINT", "EDITPART"};
constexpr std::array<std::string_view, 4> kNames = {"add", "remove", "paint",
                                                    "editpart"};

struct Word {
  std::string text;
  std::size_t column;  // 1-based
};

std::vector<Word> split_words(std::string_view s) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    out.push_back({std::string(s.substr(start, i - start)), start + 1});
  }
  return out;
}

// Recursive-descent reader over the words of one line.
class LineParser {
 public:
  LineParser(const Grammar& g, std::string_view text, std::size_t line)
      : g_(g), words_(split_words(text)), line_(line), end_col_(text.size() + 1) {}

  FunctionDef parse() {
    FunctionDef f;
    const auto kind = expect_keyword();
    const PartKind target = expect_part();
    f.transform.target = target;
    switch (kind) {
      case TransformKind::kAdd: {
        const PartType t = expect_type();
        const Color c = expect_color();
        f.transform.op = AddPart{{t, c}};
        break;
      }
      case TransformKind::kRemove:
        f.transform.op = RemovePart{};
        break;
      case TransformKind::kPaint:
        f.transform.op = PaintPart{expect_color()};
        break;
      case TransformKind::kEditPart:
        f.transform.op = EditPart{expect_type()};
        break;
    }
    expect_literal("IF");
    const std::size_t cond_col = column();
    f.condition.target = expect_part();
    if (peek() == "ABSENT") {
      advance();
      f.condition.present = false;
    } else if (peek() == "PRESENT") {
      advance();
      f.condition.present = true;
      if (peek() == "TYPE") {
        advance();
        if (peek() == "ANY") {
          advance();
        } else {
          f.condition.type_filter = expect_type();
        }
      }
      if (peek() == "COLOR") {
        advance();
        if (peek() == "ANY") {
          advance();
        } else {
          f.condition.color_filter = expect_color();
        }
      }
    } else {
      fail("expected ABSENT or PRESENT");
    }
    if (pos_ < words_.size()) fail("expected end of definition");
    try {
      check_function(g_, f);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_, cond_col);
    }
    return f;
  }

 private:
  std::string_view peek() const {
    return pos_ < words_.size() ? std::string_view(words_[pos_].text)
                                : std::string_view();
  }
  std::size_t column() const {
    return pos_ < words_.size() ? words_[pos_].column : end_col_;
  }
  void advance() { ++pos_; }

  [[noreturn]] void fail(const std::string& expected) const {
    const std::string got = pos_ < words_.size()
                                ? "'" + words_[pos_].text + "'"
                                : std::string("end of line");
    throw ParseError(expected + ", got " + got, line_, column());
  }

  TransformKind expect_keyword() {
    for (std::size_t i = 0; i < kKeywords.size(); ++i) {
      if (peek() == kKeywords[i]) {
        advance();
        return static_cast<TransformKind>(i);
      }
    }
    fail("expected ADD, REMOVE, PAINT or EDITPART");
  }
  PartKind expect_part() {
    const auto k = part_from_token(peek());
    if (!k || !g_.has_part(*k)) fail("expected part name");
    advance();
    return *k;
  }
  PartType expect_type() {
    const auto t = g_.find_type_token(peek());
    if (!t) fail("expected type token T1..T" + std::to_string(g_.num_types));
    advance();
    return *t;
  }
  Color expect_color() {
    const auto c = g_.find_color(peek());
    if (!c) fail("expected color");
    advance();
    return *c;
  }
  void expect_literal(std::string_view lit) {
    if (peek() != lit) fail("expected " + std::string(lit));
    advance();
  }

  const Grammar& g_;
  std::vector<Word> words_;
  std::size_t line_;
  std::size_t end_col_;
  std::size_t pos_ = 0;
};

bool is_handle(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

}  // namespace

std::string_view transform_keyword(TransformKind k) {
  return kKeywords[static_cast<std::size_t>(k)];
}
std::string_view transform_name(TransformKind k) {
  return kNames[static_cast<std::size_t>(k)];
}

bool Condition::holds(const CarTree& car) const {
  const auto& p = car.part(target);
  if (!present) return !p.has_value();
  if (!p) return false;
  if (type_filter && p->type != *type_filter) return false;
  if (color_filter && p->color != *color_filter) return false;
  return true;
}

void check_function(const Grammar& g, const FunctionDef& f) {
  if (f.condition.target != f.transform.target) {
    throw Error("condition must target the transformed part");
  }
  if (!g.has_part(f.transform.target)) {
    throw Error("part not in grammar");
  }
  const auto& c = f.condition;
  if (!c.present && (c.type_filter || c.color_filter)) {
    throw Error("an absent-condition takes no filters");
  }
  auto type_ok = [&](PartType t) { return t.value >= 1 && t.value <= g.num_types; };
  auto color_ok = [&](Color col) { return col.index < g.num_colors(); };
  if (c.type_filter && !type_ok(*c.type_filter)) throw Error("type filter out of range");
  if (c.color_filter && !color_ok(*c.color_filter)) throw Error("color filter out of range");

  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, AddPart>) {
          if (c.present) throw Error("ADD requires an ABSENT condition");
          if (!type_ok(op.spec.type) || !color_ok(op.spec.color)) {
            throw Error("added part outside grammar");
          }
        } else {
          if (!c.present) {
            throw Error(std::string(transform_keyword(f.kind())) +
                        " requires a PRESENT condition");
          }
          if constexpr (std::is_same_v<T, PaintPart>) {
            if (!color_ok(op.color)) throw Error("paint color outside grammar");
            if (c.color_filter && *c.color_filter == op.color) {
              throw Error("PAINT to the color the condition pins");
            }
          } else if constexpr (std::is_same_v<T, EditPart>) {
            if (!type_ok(op.type)) throw Error("edit type outside grammar");
            if (c.type_filter && *c.type_filter == op.type) {
              throw Error("EDITPART to the type the condition pins");
            }
          }
        }
      },
      f.transform.op);
}

bool is_valid_input(const FunctionDef& f, const CarTree& car) {
  return f.condition.holds(car);
}

std::optional<CarTree> apply_strict(const FunctionDef& f, const CarTree& car) {
  if (!is_valid_input(f, car)) return std::nullopt;
  const PartKind k = f.transform.target;
  return std::visit(
      [&](const auto& op) -> CarTree {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, AddPart>) {
          return car.with(k, op.spec);
        } else if constexpr (std::is_same_v<T, RemovePart>) {
          return car.without(k);
        } else if constexpr (std::is_same_v<T, PaintPart>) {
          PartSpec s = *car.part(k);
          s.color = op.color;
          return car.with(k, s);
        } else {
          PartSpec s = *car.part(k);
          s.type = op.type;
          return car.with(k, s);
        }
      },
      f.transform.op);
}

CarTree apply(const FunctionDef& f, const CarTree& car) {
  if (auto out = apply_strict(f, car)) return *out;
  return car;
}

bool is_degenerate(const Grammar& g, const FunctionDef& f) {
  // Only the target slot matters; sweep its states.
  const PartKind k = f.transform.target;
  for (std::size_t code = 0; code < g.slot_states(); ++code) {
    CarTree car;
    car.set(k, g.decode_slot(code));
    if (apply(f, car) != car) return false;
  }
  return true;
}

std::string pool_handle(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "fn%04zu", index);
  return buf;
}

std::vector<FunctionDef> enumerate_functions(const Grammar& g,
                                             FunctionEnumOptions opts) {
  std::vector<FunctionDef> candidates;
  std::vector<std::optional<PartType>> type_filters = {std::nullopt};
  for (int t = 1; t <= g.num_types; ++t) {
    type_filters.push_back(PartType{static_cast<std::uint8_t>(t)});
  }
  std::vector<std::optional<Color>> color_filters = {std::nullopt};
  for (std::size_t c = 0; c < g.num_colors(); ++c) {
    color_filters.push_back(Color{static_cast<std::uint8_t>(c)});
  }
  auto push = [&](Condition cond, Transform tr) {
    candidates.push_back(FunctionDef{"", cond, tr});
  };

  for (PartKind k : g.parts) {
    for (int t = 1; t <= g.num_types; ++t) {
      for (std::size_t c = 0; c < g.num_colors(); ++c) {
        push(Condition::absent(k),
             {k, AddPart{{PartType{static_cast<std::uint8_t>(t)},
                          Color{static_cast<std::uint8_t>(c)}}}});
      }
    }
    for (const auto& tf : type_filters) {
      for (const auto& cf : color_filters) {
        push(Condition::present_with(k, tf, cf), {k, RemovePart{}});
      }
    }
    for (const auto& tf : type_filters) {
      for (const auto& cf : color_filters) {
        for (std::size_t c = 0; c < g.num_colors(); ++c) {
          push(Condition::present_with(k, tf, cf),
               {k, PaintPart{Color{static_cast<std::uint8_t>(c)}}});
        }
      }
    }
    for (const auto& tf : type_filters) {
      for (const auto& cf : color_filters) {
        for (int t = 1; t <= g.num_types; ++t) {
          push(Condition::present_with(k, tf, cf),
               {k, EditPart{PartType{static_cast<std::uint8_t>(t)}}});
        }
      }
    }
  }

  std::vector<FunctionDef> out;
  std::set<std::vector<std::size_t>> fingerprints;
  for (auto& f : candidates) {
    try {
      check_function(g, f);
    } catch (const Error&) {
      continue;
    }
    if (is_degenerate(g, f)) continue;
    if (opts.dedup_extensional) {
      // Validity and output per target-slot state determine behavior on
      // every car.
      std::vector<std::size_t> fp = {slot(f.target())};
      for (std::size_t code = 0; code < g.slot_states(); ++code) {
        CarTree car;
        car.set(f.target(), g.decode_slot(code));
        const auto res = apply_strict(f, car);
        fp.push_back(res ? 1 + g.encode_slot(res->part(f.target())) : 0);
      }
      if (!fingerprints.insert(fp).second) continue;
    }
    f.handle = pool_handle(out.size());
    out.push_back(std::move(f));
  }
  return out;
}

// ---- DSL ------------------------------------------------------------------

std::string serialize_function(const Grammar& g, const FunctionDef& f) {
  std::string out(transform_keyword(f.kind()));
  out += ' ';
  out += part_token(f.transform.target);
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, AddPart>) {
          out += ' ' + g.type_token(op.spec.type) + ' ' +
                 g.color_name(op.spec.color);
        } else if constexpr (std::is_same_v<T, PaintPart>) {
          out += ' ' + g.color_name(op.color);
        } else if constexpr (std::is_same_v<T, EditPart>) {
          out += ' ' + g.type_token(op.type);
        }
      },
      f.transform.op);
  out += " IF ";
  out += part_token(f.condition.target);
  if (!f.condition.present) {
    out += " ABSENT";
  } else {
    out += " PRESENT TYPE ";
    out += f.condition.type_filter ? g.type_token(*f.condition.type_filter)
                                   : std::string("ANY");
    out += " COLOR ";
    out += f.condition.color_filter ? g.color_name(*f.condition.color_filter)
                                    : std::string("ANY");
  }
  return out;
}

FunctionDef parse_function(const Grammar& g, std::string_view text,
                           std::size_t line) {
  return LineParser(g, text, line).parse();
}

std::vector<FunctionDef> parse_function_file(const Grammar& g,
                                             std::string_view text) {
  std::vector<FunctionDef> out;
  std::set<std::string> handles;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    // Keep columns relative to the original line by blanking the prefix.
    std::string body(line);
    std::string handle;
    if (auto colon = body.find(':'); colon != std::string::npos) {
      const auto first = body.find_first_not_of(" \t");
      handle = body.substr(first, colon - first);
      while (!handle.empty() && std::isspace(static_cast<unsigned char>(handle.back()))) {
        handle.pop_back();
      }
      if (!is_handle(handle)) {
        throw ParseError("invalid handle '" + handle + "'", line_no, first + 1);
      }
      for (std::size_t i = 0; i <= colon; ++i) body[i] = ' ';
    }
    FunctionDef f = parse_function(g, body, line_no);
    f.handle = handle.empty() ? pool_handle(out.size()) : handle;
    if (!handles.insert(f.handle).second) {
      throw ParseError("duplicate handle '" + f.handle + "'", line_no, 1);
    }
    out.push_back(std::move(f));
    if (end == text.size()) break;
  }
  return out;
}

std::string format_function_file(const Grammar& g,
                                 const std::vector<FunctionDef>& fs) {
  std::string out;
  for (const auto& f : fs) {
    out += f.handle + ": " + serialize_function(g, f) + "\n";
  }
  return out;
}

nlohmann::json function_to_json(const Grammar& g, const FunctionDef& f) {
  nlohmann::json cond = {{"target", part_name(f.condition.target)},
                         {"mode", f.condition.present ? "present" : "absent"}};
  if (f.condition.present) {
    cond["type"] = f.condition.type_filter
                       ? nlohmann::json(f.condition.type_filter->value)
                       : nlohmann::json(nullptr);
    cond["color"] = f.condition.color_filter
                        ? nlohmann::json(g.color_name(*f.condition.color_filter))
                        : nlohmann::json(nullptr);
  }
  nlohmann::json tr = {{"kind", transform_name(f.kind())},
                       {"target", part_name(f.transform.target)}};
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, AddPart>) {
          tr["type"] = op.spec.type.value;
          tr["color"] = g.color_name(op.spec.color);
        } else if constexpr (std::is_same_v<T, PaintPart>) {
          tr["color"] = g.color_name(op.color);
        } else if constexpr (std::is_same_v<T, EditPart>) {
          tr["type"] = op.type.value;
        }
      },
      f.transform.op);
  return {{"handle", f.handle},
          {"dsl", serialize_function(g, f)},
          {"condition", cond},
          {"transform", tr}};
}

FunctionDef function_from_json(const Grammar& g, const nlohmann::json& j) {
  auto part = [&](const nlohmann::json& v) {
    const auto k = part_from_name(v.get<std::string>());
    if (!k) throw Error("function JSON: unknown part " + v.dump());
    return *k;
  };
  auto type = [](const nlohmann::json& v) {
    return PartType{static_cast<std::uint8_t>(v.get<int>())};
  };
  FunctionDef f;
  f.handle = j.value("handle", "");
  const auto& c = j.at("condition");
  f.condition.target = part(c.at("target"));
  f.condition.present = c.at("mode").get<std::string>() == "present";
  if (f.condition.present) {
    if (c.contains("type") && !c.at("type").is_null()) {
      f.condition.type_filter = type(c.at("type"));
    }
    if (c.contains("color") && !c.at("color").is_null()) {
      f.condition.color_filter = g.color(c.at("color").get<std::string>());
    }
  }
  const auto& t = j.at("transform");
  f.transform.target = part(t.at("target"));
  const auto kind = t.at("kind").get<std::string>();
  if (kind == "add") {
    f.transform.op = AddPart{{type(t.at("type")), g.color(t.at("color").get<std::string>())}};
  } else if (kind == "remove") {
    f.transform.op = RemovePart{};
  } else if (kind == "paint") {
    f.transform.op = PaintPart{g.color(t.at("color").get<std::string>())};
  } else if (kind == "editpart") {
    f.transform.op = EditPart{type(t.at("type"))};
  } else {
    throw Error("function JSON: unknown transform kind '" + kind + "'");
  }
  check_function(g, f);
  return f;
}

std::map<TransformKind, std::size_t> count_by_kind(
    const std::vector<FunctionDef>& fs) {
  std::map<TransformKind, std::size_t> out;
  for (TransformKind k : kAllTransformKinds) out[k] = 0;
  for (const auto& f : fs) ++out[f.kind()];
  return out;
}

}  // namespace carfn
