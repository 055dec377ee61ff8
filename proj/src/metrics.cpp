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

#include "carfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "carfn/error.hpp"

namespace carfn {
namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Contrast paired(const std::vector<double>& d) {
  Contrast c;
  c.mean_delta = mean_of(d);
  c.df = d.empty() ? 0 : d.size() - 1;
  const double sd = sample_sd(d);
  if (d.size() < 2) return c;
  if (sd == 0.0) {
    if (c.mean_delta == 0.0) {
      c.t = 0.0;
      c.p_two_sided = 1.0;
    }
    return c;
  }
  const double t = c.mean_delta / (sd / std::sqrt(static_cast<double>(d.size())));
  c.t = t;
  boost::math::students_t dist(static_cast<double>(c.df));
  c.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return c;
}

// Accumulates records of one condition (or all) keyed by group.
struct Bucket {
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_group;  // correct, total
  ConditionMetrics m;

  void add(const GenerationRecord& r, const ErrorLabel& label) {
    auto& [correct, total] = by_group[r.group];
    ++total;
    ++m.accuracy.records;
    if (label.kind == ErrorKind::kCorrect) {
      ++correct;
      return;
    }
    ++m.incorrect;
    ++m.error_counts[label.name()];
    if (label.ambiguous) ++m.ambiguous_copies;
  }

  ConditionMetrics finish() {
    std::vector<double> means;
    for (const auto& [g, ct] : by_group) {
      means.push_back(static_cast<double>(ct.first) / static_cast<double>(ct.second));
    }
    m.accuracy.mean = mean_of(means);
    m.accuracy.groups = means.size();
    if (means.size() >= 2) {
      m.accuracy.sem = sample_sd(means) / std::sqrt(static_cast<double>(means.size()));
    }
    for (const auto& [name, n] : m.error_counts) {
      m.error_proportions[name] = static_cast<double>(n) / static_cast<double>(m.incorrect);
    }
    return m;
  }
};

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json condition_json(const ConditionMetrics& c) {
  return {{"accuracy", c.accuracy.mean},
          {"sem", opt(c.accuracy.sem)},
          {"groups", c.accuracy.groups},
          {"records", c.accuracy.records},
          {"incorrect", c.incorrect},
          {"error_counts", c.error_counts},
          {"error_proportions", c.error_proportions},
          {"ambiguous_copies", c.ambiguous_copies}};
}

nlohmann::json contrast_json(const Contrast& c) {
  return {{"mean_delta", c.mean_delta}, {"t", opt(c.t)}, {"df", c.df},
          {"p_two_sided", opt(c.p_two_sided)}};
}

}  // namespace

BiasReport bias_report(std::span<const ParticipantAccuracy> participants) {
  std::vector<double> max_util, transparency;
  for (const auto& p : participants) {
    for (ConditionTag t : kComposedTags) {
      if (!p.accuracy.count(t)) {
        throw Error("bias_report: participant " + p.participant + " lacks condition " +
                    std::string(tag_name(t)));
      }
    }
    const double f = p.accuracy.at(ConditionTag::kFeeding);
    const double cf = p.accuracy.at(ConditionTag::kCounterFeeding);
    const double bl = p.accuracy.at(ConditionTag::kBleeding);
    const double cbl = p.accuracy.at(ConditionTag::kCounterBleeding);
    max_util.push_back((f + cbl) / 2.0 - (bl + cf) / 2.0);
    transparency.push_back((f + bl) / 2.0 - (cf + cbl) / 2.0);
  }
  BiasReport r;
  r.participants = participants.size();
  r.max_utilization = paired(max_util);
  r.transparency = paired(transparency);
  return r;
}

LoglikReport loglik_report(std::span<const GenerationRecord> records) {
  LoglikReport r;
  std::map<ConditionTag, std::vector<double>> per;
  std::vector<double> all;
  for (const auto& rec : records) {
    if (!rec.token_logprobs) {
      throw Error("loglik_report: record " + rec.episode_id + "/" + rec.query_id +
                  " has no token log-probabilities");
    }
    std::size_t n_tokens = 0;
    if (rec.produced_tokens) {
      n_tokens = rec.produced_tokens->size();
    } else if (rec.produced) {
      // Without a grammar only the token count is needed: CAR plus five per part.
      n_tokens = 1 + 5 * rec.produced->part_count();
    }
    if (rec.token_logprobs->size() != n_tokens) {
      throw Error("loglik_report: record " + rec.episode_id + "/" + rec.query_id + " has " +
                  std::to_string(rec.token_logprobs->size()) + " log-probabilities for " +
                  std::to_string(n_tokens) + " tokens");
    }
    double sum = 0.0;
    for (double lp : *rec.token_logprobs) sum += lp;
    per[rec.condition].push_back(sum);
    all.push_back(sum);
  }
  r.cars = all.size();
  r.mean = mean_of(all);
  for (const auto& [t, v] : per) r.by_condition[t] = mean_of(v);
  return r;
}

MetricsReport score_generations(std::span<const GenerationRecord> records) {
  if (records.empty()) throw Error("score_generations: no records");
  Bucket overall;
  std::map<ConditionTag, Bucket> per;
  // group -> condition -> (correct, total)
  std::map<std::string, std::map<ConditionTag, std::pair<std::size_t, std::size_t>>> groups;
  bool all_logprobs = true;
  for (const auto& r : records) {
    const ErrorLabel label = classify_error(r);
    overall.add(r, label);
    per[r.condition].add(r, label);
    auto& ct = groups[r.group][r.condition];
    ct.first += label.kind == ErrorKind::kCorrect;
    ++ct.second;
    all_logprobs = all_logprobs && r.token_logprobs.has_value();
  }
  MetricsReport out;
  out.overall = overall.finish();
  for (auto& [t, b] : per) out.by_condition[t] = b.finish();

  std::vector<ParticipantAccuracy> parts;
  bool complete = true;
  for (const auto& [g, conds] : groups) {
    ParticipantAccuracy p{g, {}};
    for (ConditionTag t : kComposedTags) {
      auto it = conds.find(t);
      if (it == conds.end()) {
        complete = false;
        break;
      }
      p.accuracy[t] = static_cast<double>(it->second.first) / it->second.second;
    }
    if (!complete) break;
    parts.push_back(std::move(p));
  }
  if (complete && parts.size() >= 2) out.bias = bias_report(parts);
  if (all_logprobs) out.loglik = loglik_report(records);
  return out;
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [t, c] : r.by_condition) by[std::string(tag_name(t))] = condition_json(c);
  nlohmann::json j = {{"overall", condition_json(r.overall)}, {"by_condition", by}};
  if (r.bias) {
    j["bias"] = {{"participants", r.bias->participants},
                 {"max_utilization", contrast_json(r.bias->max_utilization)},
                 {"transparency", contrast_json(r.bias->transparency)}};
  }
  if (r.loglik) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [t, v] : r.loglik->by_condition) per[std::string(tag_name(t))] = v;
    j["loglik"] = {{"cars", r.loglik->cars}, {"mean", r.loglik->mean}, {"by_condition", per}};
  }
  return j;
}

std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t name_w = 5;
  for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_w)) << "Model";
  for (const char* h : {"LogLik", "Overall", "F", "CF", "BL", "CBL", "Single"}) {
    out << "  " << std::right << std::setw(8) << h;
  }
  out << "\n";
  auto cell = [&](std::optional<double> v, int precision) {
    out << "  " << std::right << std::setw(8);
    if (v) {
      out << std::fixed << std::setprecision(precision) << *v;
    } else {
      out << "-";
    }
  };
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(name_w)) << name;
    cell(r.loglik ? std::optional<double>(r.loglik->mean) : std::nullopt, 2);
    cell(r.overall.accuracy.mean, 3);
    for (ConditionTag t : kComposedTags) {
      auto it = r.by_condition.find(t);
      cell(it == r.by_condition.end() ? std::nullopt
                                      : std::optional<double>(it->second.accuracy.mean),
           3);
    }
    // Single-function accuracy pools valid and invalid probes.
    std::size_t correct = 0, total = 0;
    for (ConditionTag t : {ConditionTag::kSingleValid, ConditionTag::kSingleInvalid}) {
      auto it = r.by_condition.find(t);
      if (it == r.by_condition.end()) continue;
      total += it->second.accuracy.records;
      correct += it->second.accuracy.records - it->second.incorrect;
    }
    cell(total ? std::optional<double>(static_cast<double>(correct) / total) : std::nullopt, 3);
    out << "\n";
  }
  return out.str();
}

std::string format_error_table(const MetricsReport& r) {
  std::set<std::string> names;
  for (const auto& [t, c] : r.by_condition) {
    for (const auto& [n, v] : c.error_proportions) names.insert(n);
  }
  std::ostringstream out;
  out << std::left << std::setw(16) << "Condition" << std::right << std::setw(10) << "Errors";
  for (const auto& n : names) out << "  " << n;
  out << "\n";
  for (const auto& [t, c] : r.by_condition) {
    out << std::left << std::setw(16) << tag_name(t) << std::right << std::setw(10)
        << c.incorrect;
    for (const auto& n : names) {
      auto it = c.error_proportions.find(n);
      const double v = it == c.error_proportions.end() ? 0.0 : it->second;
      out << "  " << std::setw(static_cast<int>(n.size())) << std::fixed
          << std::setprecision(3) << v;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace carfn
