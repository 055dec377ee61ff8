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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "carfn/car.hpp"
#include "carfn/interaction.hpp"
#include "json.hpp"

namespace carfn {

struct NoiseConfig {
  double p_flip = 0.1;
};

struct RunConfig {
  Grammar grammar = Grammar::standard();
  std::uint64_t seed = 0;
  // Derived from `seed` when unset.
  std::optional<std::uint64_t> split_seed;
  double val_fraction = 0.2;
  std::size_t base_n = 1000;
  std::size_t val_n = 200;
  std::size_t s_n = 2000;
  std::size_t h_participants = 55;
  // Triplets drawn for the experiment; the first `h_triplets` feed H, the
  // rest are held out for evaluation.
  std::size_t triplets = 8;
  std::size_t h_triplets = 4;
  // Trial-log CSV; a surrogate log is generated when empty.
  std::string trial_log;
  NoiseConfig noise;
  Quantifier quantifier = Quantifier::kUniversal;
  std::size_t workers = 1;
  std::string out = "out";

  std::uint64_t resolved_split_seed() const;
  // Throws ConfigError.
  void validate() const;
};

nlohmann::json config_to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
// Accepts `//` and `/* */` comments.
RunConfig config_from_text(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace carfn
