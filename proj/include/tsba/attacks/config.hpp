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

#include "tsba/core/error.hpp"
#include "tsba/nn/train.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace tsba {

enum class AttackKind { vanilla_fixed, vanilla_random, static_noise, tsba_a, tsba_b, universal };

inline AttackKind parse_attack(const std::string& s) {
  if (s == "vanilla_fixed") return AttackKind::vanilla_fixed;
  if (s == "vanilla_random") return AttackKind::vanilla_random;
  if (s == "static_noise") return AttackKind::static_noise;
  if (s == "tsba_a") return AttackKind::tsba_a;
  if (s == "tsba_b") return AttackKind::tsba_b;
  if (s == "universal") return AttackKind::universal;
  throw ConfigError("unknown attack '" + s + "'");
}

inline std::string to_string(AttackKind a) {
  switch (a) {
    case AttackKind::vanilla_fixed: return "vanilla_fixed";
    case AttackKind::vanilla_random: return "vanilla_random";
    case AttackKind::static_noise: return "static_noise";
    case AttackKind::tsba_a: return "tsba_a";
    case AttackKind::tsba_b: return "tsba_b";
    case AttackKind::universal: return "universal";
  }
  return "?";
}

inline bool uses_generator(AttackKind a) {
  return a == AttackKind::tsba_a || a == AttackKind::tsba_b || a == AttackKind::universal;
}

struct AttackConfig {
  double poison_rate = 0.10;
  double clip_fraction = 0.10;
  int target_class = 0;
  int clean_epochs = 20;
  int backdoor_epochs = 500;
  double generator_learning_rate = 1e-3;
  // vanilla pattern width and static-noise size, as fractions
  double pattern_fraction = 0.05;
  double noise_fraction = 0.10;
  Index noise_period = 20;
  std::uint64_t seed = 0;
  TrainConfig classifier;  // optimiser and early-stop settings for f

  void validate(int num_classes) const {
    if (!(poison_rate > 0 && poison_rate <= 1)) throw ConfigError("poison_rate must be in (0, 1]");
    if (!(clip_fraction >= 0 && clip_fraction <= 1)) throw ConfigError("clip_fraction must be in [0, 1]");
    if (target_class < 0 || target_class >= num_classes)
      throw ConfigError("target_class " + std::to_string(target_class) + " outside [0, " + std::to_string(num_classes) + ")");
    if (clean_epochs < 0 || backdoor_epochs < 0) throw ConfigError("epoch budgets must be non-negative");
    classifier.validate();
  }
};

// round(rate * n); rejects an empty poison set.
// Model selection for backdoored training runs: clean accuracy first, ASR only
// breaks near-ties. Averaging the two would favour a model that collapses onto
// the target class (chance CA, 100% ASR) over an accurate one still learning
// the trigger.
inline double backdoor_selection_score(double ca, double asr) { return ca + 0.04 * asr; }

inline std::size_t poison_count(double rate, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  if (k < 1)
    throw ConfigError("poison rate " + std::to_string(rate) + " selects no samples out of " + std::to_string(n));
  return k;
}

}  // namespace tsba
