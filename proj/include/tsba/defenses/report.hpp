// Copyright 2026 The tsbalab Authors
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

#include "tsba/eval/metrics.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace tsba {

enum class DefenseKind { none, nc, fp, anp };

inline DefenseKind parse_defense(const std::string& s) {
  if (s == "none") return DefenseKind::none;
  if (s == "nc") return DefenseKind::nc;
  if (s == "fp") return DefenseKind::fp;
  if (s == "anp") return DefenseKind::anp;
  throw ConfigError("unknown defense '" + s + "'");
}

inline std::string to_string(DefenseKind d) {
  switch (d) {
    case DefenseKind::none: return "none";
    case DefenseKind::nc: return "nc";
    case DefenseKind::fp: return "fp";
    case DefenseKind::anp: return "anp";
  }
  return "?";
}

// A defended copy of the model plus whatever the defense learned about it.
template <typename T>
struct DefenseOutcome {
  Network<T> model;
  DefenseKind kind = DefenseKind::none;
  bool failed = false;  // on failure, model is the untouched input
  std::string failure;
  nlohmann::json artifacts = nlohmann::json::object();
};

struct DefenseReport {
  DefenseKind kind = DefenseKind::none;
  double ca_before = 0, ca_after = 0;
  double asr_before = 0, asr_after = 0;
  bool failed = false;
  std::string failure;
  nlohmann::json artifacts = nlohmann::json::object();

  double delta_ca() const { return ca_after - ca_before; }
  double delta_asr() const { return asr_after - asr_before; }

  nlohmann::json to_json() const {
    return {{"defense", to_string(kind)}, {"ca_before", ca_before}, {"ca_after", ca_after},
            {"asr_before", asr_before},  {"asr_after", asr_after}, {"delta_ca", delta_ca()},
            {"delta_asr", delta_asr()},  {"failed", failed},       {"failure", failure},
            {"artifacts", artifacts}};
  }
};

// Paired before/after metrics on one test split and one poisoned construction.
template <typename T>
DefenseReport assess_defense(const Network<T>& before, const DefenseOutcome<T>& after, const Dataset& test,
                             const Stamp& stamp, int target) {
  DefenseReport r;
  r.kind = after.kind;
  r.failed = after.failed;
  r.failure = after.failure;
  r.artifacts = after.artifacts;
  r.ca_before = clean_accuracy(before, test);
  r.asr_before = attack_success_rate(before, stamp, test, target);
  r.ca_after = clean_accuracy(after.model, test);
  r.asr_after = attack_success_rate(after.model, stamp, test, target);
  return r;
}

namespace detail {

inline std::vector<const MatrixD*> sample_ptrs(const Dataset& ds) {
  std::vector<const MatrixD*> out;
  for (const auto& s : ds.samples) out.push_back(&s.values);
  return out;
}

}  // namespace detail

}  // namespace tsba
