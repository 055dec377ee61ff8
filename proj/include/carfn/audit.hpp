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
#include <map>
#include <string>
#include <vector>

#include "carfn/episode.hpp"
#include "json.hpp"

namespace carfn {

struct AuditReport {
  std::size_t episodes = 0;
  std::map<std::string, std::size_t> families;  // "F/CF" -> count
  std::size_t composed_queries = 0;
  std::size_t flipped_queries = 0;
  std::size_t human_queries = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  double flip_fraction() const {
    return composed_queries ? static_cast<double>(flipped_queries) / composed_queries : 0.0;
  }
};

// Re-verifies a corpus against the oracle and its own header:
//  - supports: output == apply, validity == is_valid_input, valid inputs
//    change the car;
//  - query targets: oracle composition, or the reversed order when flipped;
//    logged human targets are exempt;
//  - shape constants for base-style or experiment-style episodes;
//  - the function pair satisfies the family's relation;
//  - split hygiene: functions come from the split list matching the
//    provenance and never from the withheld set (H uses only withheld);
//  - family counts ceil(n/2)/floor(n/2) for base-style corpora;
//  - no single-function query repeats a support input of its function
//    (base-style only).
AuditReport audit_corpus(const Corpus& c);

nlohmann::json audit_to_json(const AuditReport& r, std::size_t max_violations = 10);

}  // namespace carfn
