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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carfn/oracle.hpp"
#include "json.hpp"

namespace carfn {

// Mean of per-group means with the standard error of those means. `sem` is
// empty with fewer than two groups.
struct RateStat {
  double mean = 0.0;
  std::optional<double> sem;
  std::size_t groups = 0;
  std::size_t records = 0;
};

struct ConditionMetrics {
  RateStat accuracy;
  std::size_t incorrect = 0;
  // Over incorrect generations only; keys are ErrorLabel::name().
  std::map<std::string, std::size_t> error_counts;
  std::map<std::string, double> error_proportions;
  std::size_t ambiguous_copies = 0;
};

struct Contrast {
  double mean_delta = 0.0;
  // Paired t statistic; empty when the deltas have zero spread but a
  // nonzero mean.
  std::optional<double> t;
  std::size_t df = 0;
  std::optional<double> p_two_sided;
};

// Participant-level contrasts over the four composed conditions:
// maximum utilization = mean(F, CBL) - mean(BL, CF),
// transparency        = mean(F, BL)  - mean(CF, CBL).
struct BiasReport {
  std::size_t participants = 0;
  Contrast max_utilization;
  Contrast transparency;
};

struct ParticipantAccuracy {
  std::string participant;
  std::map<ConditionTag, double> accuracy;
};

// Throws Error naming the first participant lacking a composed condition.
BiasReport bias_report(std::span<const ParticipantAccuracy> participants);

struct LoglikReport {
  std::size_t cars = 0;
  double mean = 0.0;
  std::map<ConditionTag, double> by_condition;
};

// Per-car log-likelihood is the sum of its token log-probabilities. Throws
// Error when a record lacks log-probabilities or their count differs from the
// produced token count.
LoglikReport loglik_report(std::span<const GenerationRecord> records);

struct MetricsReport {
  ConditionMetrics overall;
  std::map<ConditionTag, ConditionMetrics> by_condition;
  std::optional<BiasReport> bias;      // when every group has all four conditions
  std::optional<LoglikReport> loglik;  // when every record has log-probabilities
};

// Throws Error on empty input. Result does not depend on record order.
MetricsReport score_generations(std::span<const GenerationRecord> records);

nlohmann::json metrics_to_json(const MetricsReport& r);

// Aligned table: one row per report, columns LogLik, Overall, F, CF, BL, CBL,
// Single.
std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Error-type proportions per condition, one row per condition.
std::string format_error_table(const MetricsReport& r);

}  // namespace carfn
