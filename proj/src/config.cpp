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

#include "carfn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "carfn/error.hpp"
#include "carfn/rng.hpp"

namespace carfn {
namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + where + k + "'");
  }
}

}  // namespace

std::uint64_t RunConfig::resolved_split_seed() const {
  return split_seed ? *split_seed : derive_seed(seed, "split");
}

void RunConfig::validate() const {
  grammar.validate();
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must be in [0, 1)");
  }
  if (!(noise.p_flip >= 0.0 && noise.p_flip <= 1.0)) {
    throw ConfigError("noise.p_flip must be in [0, 1]");
  }
  if (base_n < 2) throw ConfigError("base_n must be at least 2");
  if (h_triplets > triplets) throw ConfigError("h_triplets exceeds triplets");
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (out.empty()) throw ConfigError("out must not be empty");
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = {{"grammar", c.grammar},
                      {"seed", c.seed},
                      {"split_seed", c.split_seed ? nlohmann::json(*c.split_seed)
                                                  : nlohmann::json(nullptr)},
                      {"val_fraction", c.val_fraction},
                      {"sizes",
                       {{"base_n", c.base_n},
                        {"val_n", c.val_n},
                        {"s_n", c.s_n},
                        {"h_participants", c.h_participants}}},
                      {"experiment",
                       {{"triplets", c.triplets},
                        {"h_triplets", c.h_triplets},
                        {"trial_log", c.trial_log}}},
                      {"noise", {{"p_flip", c.noise.p_flip}}},
                      {"quantifier", std::string(quantifier_name(c.quantifier))},
                      {"workers", c.workers},
                      {"out", c.out}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  reject_unknown(j,
                 {"grammar", "seed", "split_seed", "val_fraction", "sizes", "experiment",
                  "noise", "quantifier", "workers", "out"},
                 "");
  try {
    if (j.contains("grammar")) c.grammar = j.at("grammar").get<Grammar>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key 'grammar': ") + e.what());
  }
  read(j, "seed", c.seed);
  if (j.contains("split_seed")) {
    if (j.at("split_seed").is_null()) {
      c.split_seed.reset();
    } else {
      std::uint64_t s = 0;
      read(j, "split_seed", s);
      c.split_seed = s;
    }
  }
  read(j, "val_fraction", c.val_fraction);
  if (j.contains("sizes")) {
    const auto& s = j.at("sizes");
    reject_unknown(s, {"base_n", "val_n", "s_n", "h_participants"}, "sizes.");
    read(s, "base_n", c.base_n);
    read(s, "val_n", c.val_n);
    read(s, "s_n", c.s_n);
    read(s, "h_participants", c.h_participants);
  }
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    reject_unknown(e, {"triplets", "h_triplets", "trial_log"}, "experiment.");
    read(e, "triplets", c.triplets);
    read(e, "h_triplets", c.h_triplets);
    read(e, "trial_log", c.trial_log);
  }
  if (j.contains("noise")) {
    reject_unknown(j.at("noise"), {"p_flip"}, "noise.");
    read(j.at("noise"), "p_flip", c.noise.p_flip);
  }
  if (j.contains("quantifier")) {
    std::string q;
    read(j, "quantifier", q);
    auto parsed = quantifier_from_name(q);
    if (!parsed) throw ConfigError("unknown quantifier '" + q + "'");
    c.quantifier = *parsed;
  }
  read(j, "workers", c.workers);
  read(j, "out", c.out);
  c.validate();
  return c;
}

RunConfig config_from_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace carfn
