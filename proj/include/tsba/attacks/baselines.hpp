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

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace tsba {

// Number of timesteps touched by a fractional pattern, ceil(frac * L).
inline Index pattern_width(double fraction, Index length) {
  const double raw = fraction * static_cast<double>(length);
  const auto k = static_cast<Index>(std::ceil(raw - 1e-9));
  return std::clamp<Index>(k, 0, length);
}

namespace detail {
inline void stamp_alternating(MatrixD& values, const TimeSeriesSample& x, Index start, Index width) {
  auto valid = x.valid();
  const VectorD hi = valid.colwise().maxCoeff().transpose();
  const VectorD lo = valid.colwise().minCoeff().transpose();
  for (Index i = 0; i < width; ++i) values.row(start + i) = (i % 2 == 0 ? hi : lo).transpose();
}
}  // namespace detail

// Replaces the first ceil(frac*L) timesteps with x_max, x_min, x_max, ... per variable.
inline MatrixD vanilla_fixed(const TimeSeriesSample& x, double fraction = 0.05) {
  if (fraction * static_cast<double>(x.valid_length) < 1 - 1e-9)
    throw ConfigError("vanilla pattern needs frac * L >= 1");
  const Index k = pattern_width(fraction, x.valid_length);
  MatrixD out = x.values;
  detail::stamp_alternating(out, x, 0, k);
  return out;
}

enum class ExtremumBranch { peak, trough };

struct PatternWindow {
  Index start = 0;
  Index width = 0;
  Index center = 0;
  ExtremumBranch branch = ExtremumBranch::peak;
};

// Picks a local extremum of the 3-point smoothed, variable-averaged series and
// centres a ceil(frac*L) window on it, clamped to the valid range.
inline PatternWindow vanilla_random_window(const TimeSeriesSample& x, double fraction, Rng& rng,
                                           std::optional<ExtremumBranch> forced = std::nullopt) {
  const Index L = x.valid_length;
  if (fraction * static_cast<double>(L) < 1 - 1e-9) throw ConfigError("vanilla pattern needs frac * L >= 1");
  const Index k = pattern_width(fraction, L);
  VectorD mean = x.valid().rowwise().mean();
  VectorD smooth(L);
  for (Index t = 0; t < L; ++t) {
    const Index a = std::max<Index>(0, t - 1), b = std::min<Index>(L - 1, t + 1);
    smooth(t) = mean.segment(a, b - a + 1).mean();
  }
  std::bernoulli_distribution coin(0.5);
  PatternWindow w;
  w.branch = forced ? *forced : (coin(rng) ? ExtremumBranch::peak : ExtremumBranch::trough);
  const double sign = w.branch == ExtremumBranch::peak ? 1.0 : -1.0;
  std::vector<Index> candidates;
  for (Index t = 0; t < L; ++t) {
    const double v = sign * smooth(t);
    const bool left = t == 0 || v > sign * smooth(t - 1);
    const bool right = t == L - 1 || v >= sign * smooth(t + 1);
    if (left && right) candidates.push_back(t);
  }
  if (candidates.empty()) {
    Index arg;
    (sign * smooth).maxCoeff(&arg);
    candidates.push_back(arg);
  }
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  w.center = candidates[pick(rng)];
  w.width = k;
  w.start = std::clamp<Index>(w.center - k / 2, 0, L - k);
  return w;
}

inline MatrixD vanilla_random(const TimeSeriesSample& x, double fraction, Rng& rng,
                              std::optional<ExtremumBranch> forced = std::nullopt, PatternWindow* window = nullptr) {
  PatternWindow w = vanilla_random_window(x, fraction, rng, forced);
  MatrixD out = x.values;
  detail::stamp_alternating(out, x, w.start, w.width);
  if (window) *window = w;
  return out;
}

// Single period of a sinusoid sampled at period points.
inline VectorD sinusoid_template(Index period = 20) {
  if (period < 2) throw ConfigError("noise template needs at least 2 samples");
  VectorD t(period);
  for (Index i = 0; i < period; ++i)
    t(i) = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(period));
  return t;
}

// Template tiled over the valid length, centred, rescaled to a peak-to-peak of
// amp_frac * amplitude_d and added to every variable d.
inline MatrixD static_noise_pattern(const TimeSeriesSample& x, const VectorD& tmpl, double amp_frac = 0.10) {
  if (tmpl.size() < 2) throw ConfigError("noise template needs at least 2 samples");
  const double hi = tmpl.maxCoeff(), lo = tmpl.minCoeff();
  const double ptp = hi - lo;
  const VectorD amp = amplitude(x);
  MatrixD noise = MatrixD::Zero(x.length(), x.variables());
  if (ptp <= 0) return noise;
  const double mid = 0.5 * (hi + lo);
  for (Index t = 0; t < x.valid_length; ++t) {
    const double unit = (tmpl(t % tmpl.size()) - mid) / ptp;
    for (Index d = 0; d < x.variables(); ++d) noise(t, d) = unit * amp_frac * amp(d);
  }
  return noise;
}

inline MatrixD static_noise(const TimeSeriesSample& x, const VectorD& tmpl, double amp_frac = 0.10) {
  return x.values + static_noise_pattern(x, tmpl, amp_frac);
}

}  // namespace tsba
