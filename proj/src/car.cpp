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

#include "carfn/car.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "carfn/error.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

constexpr std::array<std::string_view, 3> kPartTokens = {"WINDOW", "TIRES",
                                                         "LIGHTS"};
constexpr std::array<std::string_view, 3> kPartNames = {"window", "tires",
                                                        "lights"};

bool is_token_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isupper(c) || std::isdigit(c) || c == '_';
  });
}

}  // namespace

std::string_view part_token(PartKind k) { return kPartTokens[slot(k)]; }
std::string_view part_name(PartKind k) { return kPartNames[slot(k)]; }

std::optional<PartKind> part_from_token(std::string_view token) {
  for (PartKind k : kAllPartKinds) {
    if (part_token(k) == token) return k;
  }
  return std::nullopt;
}

std::optional<PartKind> part_from_name(std::string_view name) {
  for (PartKind k : kAllPartKinds) {
    if (part_name(k) == name) return k;
  }
  return std::nullopt;
}

// ---- Grammar --------------------------------------------------------------

void Grammar::validate() const {
  if (parts.empty()) throw ConfigError("grammar: at least one part required");
  if (!std::is_sorted(parts.begin(), parts.end()) ||
      std::adjacent_find(parts.begin(), parts.end()) != parts.end()) {
    throw ConfigError("grammar: parts must be distinct and in canonical order");
  }
  if (num_types < 2 || num_types > 9) {
    throw ConfigError("grammar: num_types must be in [2, 9]");
  }
  if (colors.size() < 2 || colors.size() > 32) {
    throw ConfigError("grammar: palette must have 2..32 colors");
  }
  if (colors.front() != "NONE") {
    throw ConfigError("grammar: first palette entry must be NONE");
  }
  for (std::size_t i = 0; i < colors.size(); ++i) {
    const auto& c = colors[i];
    if (!is_token_word(c) || c == "ANY" || c == "CAR" ||
        part_from_token(c).has_value() || find_type_token(c).has_value()) {
      throw ConfigError("grammar: invalid color name '" + c + "'");
    }
    if (std::find(colors.begin(), colors.begin() + i, c) !=
        colors.begin() + i) {
      throw ConfigError("grammar: duplicate color '" + c + "'");
    }
  }
}

bool Grammar::has_part(PartKind k) const {
  return std::find(parts.begin(), parts.end(), k) != parts.end();
}

std::uint64_t Grammar::car_count() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < parts.size(); ++i) n *= slot_states();
  return n;
}

std::optional<Color> Grammar::find_color(std::string_view name) const {
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (colors[i] == name) return Color{static_cast<std::uint8_t>(i)};
  }
  return std::nullopt;
}

Color Grammar::color(std::string_view name) const {
  if (auto c = find_color(name)) return *c;
  throw ConfigError("unknown color '" + std::string(name) + "'");
}

const std::string& Grammar::color_name(Color c) const {
  return colors.at(c.index);
}

std::string Grammar::type_token(PartType t) const {
  return "T" + std::to_string(t.value);
}

std::optional<PartType> Grammar::find_type_token(std::string_view token) const {
  if (token.size() != 2 || token[0] != 'T') return std::nullopt;
  const int v = token[1] - '0';
  if (v < 1 || v > num_types) return std::nullopt;
  return PartType{static_cast<std::uint8_t>(v)};
}

std::size_t Grammar::encode_slot(const std::optional<PartSpec>& spec) const {
  if (!spec) return 0;
  return 1 + static_cast<std::size_t>(spec->type.value - 1) * colors.size() +
         spec->color.index;
}

std::optional<PartSpec> Grammar::decode_slot(std::size_t code) const {
  if (code == 0) return std::nullopt;
  --code;
  return PartSpec{PartType{static_cast<std::uint8_t>(code / colors.size() + 1)},
                  Color{static_cast<std::uint8_t>(code % colors.size())}};
}

void to_json(nlohmann::json& j, const Grammar& g) {
  nlohmann::json parts = nlohmann::json::array();
  for (PartKind k : g.parts) parts.push_back(part_name(k));
  j = {{"parts", parts}, {"num_types", g.num_types}, {"colors", g.colors}};
}

void from_json(const nlohmann::json& j, Grammar& g) {
  Grammar out;
  if (j.contains("parts")) {
    out.parts.clear();
    for (const auto& p : j.at("parts")) {
      auto k = part_from_name(p.get<std::string>());
      if (!k) throw ConfigError("grammar: unknown part '" + p.dump() + "'");
      out.parts.push_back(*k);
    }
    std::sort(out.parts.begin(), out.parts.end());
  }
  if (j.contains("num_types")) out.num_types = j.at("num_types").get<int>();
  if (j.contains("colors")) {
    out.colors = j.at("colors").get<std::vector<std::string>>();
  }
  out.validate();
  g = std::move(out);
}

// ---- CarTree --------------------------------------------------------------

std::size_t CarTree::part_count() const {
  return static_cast<std::size_t>(
      std::count_if(parts_.begin(), parts_.end(),
                    [](const auto& p) { return p.has_value(); }));
}

CarTree CarTree::with(PartKind k, PartSpec spec) const {
  CarTree out = *this;
  out.set(k, spec);
  return out;
}

CarTree CarTree::without(PartKind k) const {
  CarTree out = *this;
  out.set(k, std::nullopt);
  return out;
}

// ---- enumeration ----------------------------------------------------------

bool in_grammar(const Grammar& g, const CarTree& car) {
  for (PartKind k : kAllPartKinds) {
    const auto& p = car.part(k);
    if (!p) continue;
    if (!g.has_part(k)) return false;
    if (p->type.value < 1 || p->type.value > g.num_types) return false;
    if (p->color.index >= g.num_colors()) return false;
  }
  return true;
}

std::uint64_t car_index(const Grammar& g, const CarTree& car) {
  if (!in_grammar(g, car)) throw Error("car_index: car outside grammar");
  std::uint64_t idx = 0;
  for (PartKind k : g.parts) idx = idx * g.slot_states() + g.encode_slot(car.part(k));
  return idx;
}

CarTree car_at(const Grammar& g, std::uint64_t index) {
  if (index >= g.car_count()) throw Error("car_at: index out of range");
  CarTree car;
  for (auto it = g.parts.rbegin(); it != g.parts.rend(); ++it) {
    car.set(*it, g.decode_slot(index % g.slot_states()));
    index /= g.slot_states();
  }
  return car;
}

std::vector<CarTree> enumerate_cars(const Grammar& g) {
  std::vector<CarTree> cars;
  cars.reserve(g.car_count());
  for_each_car(g, [&](const CarTree& c) { cars.push_back(c); });
  return cars;
}

void for_each_car(const Grammar& g,
                  const std::function<void(const CarTree&)>& visit) {
  const std::uint64_t n = g.car_count();
  for (std::uint64_t i = 0; i < n; ++i) visit(car_at(g, i));
}

CarTree sample_car(const Grammar& g, std::uint64_t seed,
                   const CarPredicate& constraint) {
  Rng rng(seed);
  const auto space = enumerate_cars(g);
  return sample_car(space, rng, constraint);
}

CarTree sample_car(std::span<const CarTree> space, Rng& rng,
                   const CarPredicate& constraint) {
  if (!constraint) {
    if (space.empty()) throw UnsatisfiableError("sample_car: empty car space");
    return space[rng.below(space.size())];
  }
  std::vector<std::size_t> matching;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (constraint(space[i])) matching.push_back(i);
  }
  if (matching.empty()) {
    throw UnsatisfiableError("sample_car: no car satisfies the constraint");
  }
  return space[matching[rng.below(matching.size())]];
}

// ---- tokens ---------------------------------------------------------------

void append_car_tokens(const Grammar& g, const CarTree& car, TokenSeq& out) {
  out.emplace_back(kCarToken);
  for (PartKind k : kAllPartKinds) {
    const auto& p = car.part(k);
    if (!p) continue;
    out.emplace_back(kOpenToken);
    out.emplace_back(part_token(k));
    out.push_back(g.type_token(p->type));
    out.push_back(g.color_name(p->color));
    out.emplace_back(kCloseToken);
  }
}

TokenSeq serialize_car(const Grammar& g, const CarTree& car) {
  TokenSeq out;
  append_car_tokens(g, car, out);
  return out;
}

CarTree parse_car_at(const Grammar& g, std::span<const std::string> tokens,
                     std::size_t& pos) {
  auto fail = [&](const std::string& what) -> ParseError {
    const std::string got =
        pos < tokens.size() ? "'" + tokens[pos] + "'" : "end of input";
    return ParseError(what + ", got " + got, 1, pos + 1);
  };
  if (pos >= tokens.size() || tokens[pos] != kCarToken) {
    throw fail("expected CAR");
  }
  ++pos;
  CarTree car;
  int last_slot = -1;
  while (pos < tokens.size() && tokens[pos] == kOpenToken) {
    ++pos;
    if (pos >= tokens.size()) throw fail("expected part name");
    const auto kind = part_from_token(tokens[pos]);
    if (!kind || !g.has_part(*kind)) throw fail("expected part name");
    if (static_cast<int>(slot(*kind)) <= last_slot) {
      throw fail("part out of canonical order or repeated");
    }
    last_slot = static_cast<int>(slot(*kind));
    ++pos;
    if (pos >= tokens.size()) throw fail("expected type token");
    const auto type = g.find_type_token(tokens[pos]);
    if (!type) throw fail("expected type token");
    ++pos;
    if (pos >= tokens.size()) throw fail("expected color");
    const auto color = g.find_color(tokens[pos]);
    if (!color) throw fail("expected color");
    ++pos;
    if (pos >= tokens.size() || tokens[pos] != kCloseToken) {
      throw fail("expected ')'");
    }
    ++pos;
    car.set(*kind, PartSpec{*type, *color});
  }
  return car;
}

CarTree parse_car(const Grammar& g, std::span<const std::string> tokens) {
  std::size_t pos = 0;
  CarTree car = parse_car_at(g, tokens, pos);
  if (pos != tokens.size()) {
    throw ParseError("trailing token '" + tokens[pos] + "'", 1, pos + 1);
  }
  return car;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

TokenSeq split_tokens(std::string_view text) {
  TokenSeq out;
  std::istringstream in{std::string(text)};
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

Vocabulary::Vocabulary(const Grammar& g) {
  tokens_ = {std::string(kPadToken), std::string(kStartToken),
             std::string(kEndToken), std::string(kCarToken),
             std::string(kOpenToken), std::string(kCloseToken)};
  for (PartKind k : g.parts) tokens_.emplace_back(part_token(k));
  for (int t = 1; t <= g.num_types; ++t) {
    tokens_.push_back(g.type_token(PartType{static_cast<std::uint8_t>(t)}));
  }
  for (const auto& c : g.colors) tokens_.push_back(c);
  for (auto h : kHandleTokens) tokens_.emplace_back(h);
  tokens_.emplace_back(kArrowToken);
  tokens_.emplace_back(kPairSeparatorToken);
}

bool Vocabulary::contains(std::string_view token) const {
  return id(token).has_value();
}

std::optional<std::size_t> Vocabulary::id(std::string_view token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tokens_.begin());
}

void Vocabulary::check(std::span<const std::string> seq) const {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!contains(seq[i])) {
      throw VocabularyError("token '" + seq[i] + "' at position " +
                            std::to_string(i) + " is not in vocabulary v" +
                            std::to_string(kVersion));
    }
  }
}

std::string Vocabulary::to_text() const {
  std::string out = "# carfn-vocab " + std::to_string(kVersion) + "\n";
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json car_to_json(const Grammar& g, const CarTree& car) {
  nlohmann::json parts = nlohmann::json::object();
  for (PartKind k : kAllPartKinds) {
    const auto& p = car.part(k);
    if (!p) continue;
    parts[std::string(part_name(k))] = {{"type", p->type.value},
                                        {"color", g.color_name(p->color)}};
  }
  return {{"parts", parts}};
}

CarTree car_from_json(const Grammar& g, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("parts") || !j.at("parts").is_object()) {
    throw Error("car JSON: expected {\"parts\": {...}}");
  }
  CarTree car;
  for (const auto& [name, spec] : j.at("parts").items()) {
    const auto kind = part_from_name(name);
    if (!kind || !g.has_part(*kind)) {
      throw Error("car JSON: unknown part '" + name + "'");
    }
    const int type = spec.at("type").get<int>();
    if (type < 1 || type > g.num_types) {
      throw Error("car JSON: type out of range for " + name);
    }
    const auto color = g.find_color(spec.at("color").get<std::string>());
    if (!color) throw Error("car JSON: unknown color for " + name);
    car.set(*kind, PartSpec{PartType{static_cast<std::uint8_t>(type)}, *color});
  }
  return car;
}

std::string to_string(const Grammar& g, const CarTree& car) {
  return join_tokens(serialize_car(g, car));
}

// ---- diffs ----------------------------------------------------------------

std::string_view change_name(ChangeKind c) {
  switch (c) {
    case ChangeKind::kAdded: return "added";
    case ChangeKind::kRemoved: return "removed";
    case ChangeKind::kRetyped: return "retyped";
    case ChangeKind::kRecolored: return "recolored";
    case ChangeKind::kRetypedAndRecolored: return "retyped_recolored";
  }
  return "?";
}

ChangeKind PartDiff::change() const {
  if (!before) return ChangeKind::kAdded;
  if (!after) return ChangeKind::kRemoved;
  const bool t = before->type != after->type;
  const bool c = before->color != after->color;
  if (t && c) return ChangeKind::kRetypedAndRecolored;
  return t ? ChangeKind::kRetyped : ChangeKind::kRecolored;
}

std::vector<PartDiff> diff_cars(const CarTree& a, const CarTree& b) {
  std::vector<PartDiff> out;
  for (PartKind k : kAllPartKinds) {
    if (a.part(k) != b.part(k)) out.push_back({k, a.part(k), b.part(k)});
  }
  return out;
}

CarTree apply_diff(const CarTree& car, std::span<const PartDiff> diffs) {
  CarTree out = car;
  for (const auto& d : diffs) {
    if (out.part(d.kind) != d.before) {
      throw Error("apply_diff: patch does not match car at " +
                  std::string(part_name(d.kind)));
    }
    out.set(d.kind, d.after);
  }
  return out;
}

std::string to_string(const Grammar& g, const PartDiff& d) {
  auto spec = [&](const PartSpec& s) {
    return g.type_token(s.type) + "," + g.color_name(s.color);
  };
  std::string out(change_name(d.change()));
  out += "(";
  out += part_name(d.kind);
  if (d.before) out += "," + spec(*d.before);
  if (d.before && d.after) out += "->";
  else if (d.after) out += ",";
  if (d.after) out += spec(*d.after);
  out += ")";
  return out;
}

}  // namespace carfn
