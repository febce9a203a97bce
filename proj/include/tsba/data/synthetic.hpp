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

#include "tsba/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace tsba {

struct SyntheticSpec {
  int classes = 2;
  int per_class = 100;
  Index length = 128;
  Index variables = 1;
  std::uint64_t seed = 0;
  int family = 0;       // base waveform shape, see synthetic_waveform()
  double noise = 0.15;  // half-width of the uniform additive noise
  // Probability that a recording opens with a start-up transient: a few
  // alternating spikes out to the signal's extremes, independent of class.
  double transient_rate = 0.0;
};

inline constexpr int kSyntheticFamilies = 5;

// Periodic base shapes with unit period and unit peak.
inline double synthetic_waveform(int family, double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  double u = phase - std::floor(phase);
  switch (((family % kSyntheticFamilies) + kSyntheticFamilies) % kSyntheticFamilies) {
    case 0:
      return std::sin(two_pi * u);
    case 1:
      return std::tanh(3.0 * std::sin(two_pi * u)) / std::tanh(3.0);
    case 2:
      return 1.0 - 4.0 * std::abs(u - 0.5);
    case 3: {
      // smoothed sawtooth: first three harmonics
      double s = std::sin(two_pi * u) - std::sin(2 * two_pi * u) / 2 + std::sin(3 * two_pi * u) / 3;
      return s / 1.3;
    }
    default:
      return (std::sin(two_pi * u) + 0.5 * std::sin(3.0 * two_pi * u)) / 1.2;
  }
}

namespace detail {
inline void add_transient(TimeSeriesSample& s, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index max_width = std::max<Index>(2, s.length() / 10);
  const Index width = std::uniform_int_distribution<Index>(2, max_width)(rng);
  const double reach = 0.7 + 0.3 * unit(rng);
  for (Index d = 0; d < s.variables(); ++d) {
    const double hi = s.values.col(d).maxCoeff(), lo = s.values.col(d).minCoeff();
    const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo) * reach;
    for (Index t = 0; t < width; ++t) s.values(t, d) = mid + (t % 2 == 0 ? half : -half);
  }
}
}  // namespace detail

// Class c is the family waveform at a class-dependent frequency and offset,
// with per-sample phase, gain and frequency jitter plus bounded noise.
inline Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (spec.per_class < 1 || spec.length < 2 || spec.variables < 1) throw ConfigError("invalid synthetic shape");
  if (!(spec.transient_rate >= 0 && spec.transient_rate <= 1)) throw ConfigError("transient_rate must be in [0, 1]");
  Rng rng = make_rng(spec.seed, 0x53594e54ULL + static_cast<std::uint64_t>(spec.family));
  Rng nuisance = make_rng(spec.seed, 0x4e55495341ULL + static_cast<std::uint64_t>(spec.family));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset ds;
  ds.name = "synthetic_f" + std::to_string(spec.family);
  ds.num_classes = spec.classes;
  ds.length = spec.length;
  ds.variables = spec.variables;
  for (int c = 0; c < spec.classes; ++c) ds.class_labels.push_back(std::to_string(c));

  const double L = static_cast<double>(spec.length);
  for (int c = 0; c < spec.classes; ++c) {
    const double cycles = 2.0 + 1.5 * c;
    const double offset = 0.25 * c;
    for (int i = 0; i < spec.per_class; ++i) {
      TimeSeriesSample s;
      s.values.resize(spec.length, spec.variables);
      s.label = c;
      s.valid_length = spec.length;
      s.sample_id = ds.name + "#c" + std::to_string(c) + "_" + std::to_string(i);
      const double phase = unit(rng);
      const double gain = 0.8 + 0.4 * unit(rng);
      const double jitter = 0.95 + 0.1 * unit(rng);
      for (Index d = 0; d < spec.variables; ++d) {
        const double var_phase = phase + static_cast<double>(d) / static_cast<double>(spec.variables + 1);
        const double var_cycles = cycles * jitter * (1.0 + 0.25 * static_cast<double>(d));
        for (Index t = 0; t < spec.length; ++t) {
          const double base = synthetic_waveform(spec.family, var_phase + var_cycles * static_cast<double>(t) / L);
          s.values(t, d) = gain * base + offset + spec.noise * (2.0 * unit(rng) - 1.0);
        }
      }
      if (unit(nuisance) < spec.transient_rate) detail::add_transient(s, nuisance);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace tsba
