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

#include <fstream>
#include <ostream>
#include <sstream>

#include "carfn/episode.hpp"
#include "carfn/error.hpp"
#include "carfn/parallel.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

std::string episode_id(Provenance p, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%06zu", i);
  return std::string(provenance_name(p)) + buf;
}

void flip_composed(Episode& e, Rng& rng, double p_flip) {
  for (auto& q : e.queries) {
    if (!is_composed(q.condition)) continue;
    if (!rng.bernoulli(p_flip)) continue;
    std::vector<std::string> reversed(q.handles.rbegin(), q.handles.rend());
    q.target = compose(e.resolve(reversed), q.input);
    q.flipped = true;
  }
}

}  // namespace

nlohmann::json header_to_json(const CorpusHeader& h) {
  return {{"record", "header"},
          {"schema_version", h.schema_version},
          {"provenance", provenance_name(h.provenance)},
          {"seed", h.seed},
          {"count", h.count},
          {"p_flip", h.p_flip},
          {"quantifier", quantifier_name(h.quantifier)},
          {"grammar", h.grammar},
          {"vocab_version", Vocabulary::kVersion},
          {"split", split_to_json(h.grammar, h.split)}};
}

CorpusHeader header_from_json(const nlohmann::json& j) {
  if (j.value("record", "") != "header") throw Error("corpus: missing header record");
  CorpusHeader h;
  h.schema_version = j.at("schema_version").get<int>();
  if (h.schema_version != kEpisodeSchemaVersion) {
    throw Error("corpus: unsupported schema_version " + std::to_string(h.schema_version));
  }
  const auto prov = provenance_from_name(j.at("provenance").get<std::string>());
  if (!prov) throw Error("corpus: unknown provenance");
  h.provenance = *prov;
  h.seed = j.at("seed").get<std::uint64_t>();
  h.count = j.at("count").get<std::size_t>();
  h.p_flip = j.at("p_flip").get<double>();
  const auto q = quantifier_from_name(j.at("quantifier").get<std::string>());
  if (!q) throw Error("corpus: unknown quantifier");
  h.quantifier = *q;
  h.grammar = j.at("grammar").get<Grammar>();
  h.split = split_from_json(h.grammar, j.at("split"));
  return h;
}

Corpus gen_base_corpus(const Grammar& g, std::uint64_t seed, const CorpusSplit& split,
                       std::size_t n, Provenance provenance, Quantifier q,
                       std::size_t workers) {
  if (n < 2) throw Error("gen_base_corpus: need at least 2 episodes");
  if (provenance != Provenance::kBaseTrain && provenance != Provenance::kBaseVal) {
    throw Error("gen_base_corpus: provenance must be base-train or base-val");
  }
  const auto& pool = provenance == Provenance::kBaseVal ? split.validation : split.train;
  const auto cars = enumerate_cars(g);
  InteractionIndex index(g, pool, q, workers);
  EpisodeSampler sampler(g, cars, index);

  std::vector<Family> families;
  families.insert(families.end(), (n + 1) / 2, Family::kFeeding);
  families.insert(families.end(), n / 2, Family::kBleeding);
  Rng order(derive_seed(seed, "families"));
  order.shuffle(families);

  Corpus c;
  c.header.provenance = provenance;
  c.header.seed = seed;
  c.header.count = n;
  c.header.quantifier = q;
  c.header.grammar = g;
  c.header.split = split;
  c.episodes.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    c.episodes[i] = sampler.sample(derive_seed(seed, "episode", i), families[i],
                                   provenance, episode_id(provenance, i));
  });
  return c;
}

Corpus gen_noisy_corpus(const Grammar& g, std::uint64_t seed, const CorpusSplit& split,
                        std::size_t n, double p_flip, Quantifier q,
                        std::size_t workers) {
  if (!(p_flip >= 0.0 && p_flip <= 1.0)) {
    throw Error("gen_noisy_corpus: p_flip must be in [0, 1]");
  }
  Corpus c = gen_base_corpus(g, seed, split, n, Provenance::kBaseTrain, q, workers);
  if (p_flip == 0.0) return c;
  c.header.provenance = Provenance::kSynthetic;
  c.header.p_flip = p_flip;
  for (std::size_t i = 0; i < c.episodes.size(); ++i) {
    auto& e = c.episodes[i];
    Rng rng(derive_seed(seed, "noise", i));
    e.provenance = Provenance::kSynthetic;
    e.id = episode_id(Provenance::kSynthetic, i);
    flip_composed(e, rng, p_flip);
  }
  return c;
}

std::string corpus_to_jsonl(const Corpus& c) {
  std::string out = header_to_json(c.header).dump() + "\n";
  for (const auto& e : c.episodes) out += episode_to_json(c.header.grammar, e).dump() + "\n";
  return out;
}

Corpus corpus_from_jsonl(std::string_view text) {
  Corpus c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        c.header = header_from_json(j);
        have_header = true;
      } else {
        c.episodes.push_back(episode_from_json(c.header.grammar, j));
      }
    } catch (const Error& e) {
      throw MalformedInputError(e.what(), line_no);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInputError(e.what(), line_no);
    }
    ++line_no;
  }
  if (!have_header) throw Error("corpus: empty file");
  return c;
}

void write_corpus(const std::string& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << corpus_to_jsonl(c);
  if (!out) throw IoError(path, "write failed");
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return corpus_from_jsonl(ss.str());
}

// ---- encoding -------------------------------------------------------------

std::vector<EncodedRecord> encode_episode(const Grammar& g, const Vocabulary& vocab,
                                          const Episode& e) {
  std::vector<TokenSeq> supports;
  for (const auto& s : e.supports) {
    TokenSeq t;
    append_car_tokens(g, s.input, t);
    t.emplace_back(kArrowToken);
    t.push_back(s.handle);
    t.emplace_back(kArrowToken);
    append_car_tokens(g, s.output, t);
    vocab.check(t);
    supports.push_back(std::move(t));
  }
  std::vector<EncodedRecord> out;
  for (const auto& q : e.queries) {
    TokenSeq stem;
    append_car_tokens(g, q.input, stem);
    stem.emplace_back(kArrowToken);
    for (const auto& h : q.handles) stem.push_back(h);
    stem.emplace_back(kArrowToken);
    vocab.check(stem);
    TokenSeq target = serialize_car(g, q.target);
    for (std::size_t i = 0; i < supports.size(); ++i) {
      EncodedRecord r;
      r.episode_id = e.id;
      r.query_id = q.id;
      r.support_index = i;
      r.input_tokens = supports[i];
      r.input_tokens.emplace_back(kPairSeparatorToken);
      r.input_tokens.insert(r.input_tokens.end(), stem.begin(), stem.end());
      r.target_tokens = target;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::pair<CarTree, std::vector<std::string>> decode_query_stem(
    const Grammar& g, std::span<const std::string> input_tokens) {
  std::size_t pos = 0;
  while (pos < input_tokens.size() && input_tokens[pos] != kPairSeparatorToken) ++pos;
  if (pos == input_tokens.size()) throw ParseError("missing '|' separator", 1, pos + 1);
  ++pos;
  CarTree car = parse_car_at(g, input_tokens, pos);
  if (pos >= input_tokens.size() || input_tokens[pos] != kArrowToken) {
    throw ParseError("expected '->' after query car", 1, pos + 1);
  }
  ++pos;
  std::vector<std::string> handles;
  while (pos < input_tokens.size() && input_tokens[pos] != kArrowToken) {
    handles.push_back(input_tokens[pos++]);
  }
  if (pos + 1 != input_tokens.size() || handles.empty()) {
    throw ParseError("malformed query stem", 1, pos + 1);
  }
  return {car, handles};
}

nlohmann::json encoded_to_json(const EncodedRecord& r) {
  return {{"episode_id", r.episode_id},
          {"query_id", r.query_id},
          {"support_index", r.support_index},
          {"input_tokens", r.input_tokens},
          {"target_tokens", r.target_tokens}};
}

void write_encoded(std::ostream& out, const Grammar& g, const Vocabulary& vocab,
                   const Corpus& c) {
  for (const auto& e : c.episodes) {
    for (const auto& r : encode_episode(g, vocab, e)) {
      out << encoded_to_json(r).dump() << '\n';
    }
  }
}

}  // namespace carfn
