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
#include <functional>
#include <span>
#include <vector>

namespace tsba {

struct RmsStealth {
  double rms_all = 0;
  double rms_top1 = 0;
  std::size_t samples = 0;
  std::size_t excluded_variables = 0;  // zero-amplitude variables skipped
};

struct SampleRms {
  double all = 0;
  double top1 = 0;
  std::size_t excluded_variables = 0;
};

// Trigger RMS of one pair, relative to the mean per-variable amplitude.
// The top-1% figure uses the ceil(1%) largest |trigger| entries.
inline SampleRms sample_rms(const TimeSeriesSample& x, const MatrixD& poisoned) {
  if (poisoned.rows() != x.values.rows() || poisoned.cols() != x.values.cols())
    throw ShapeError("poisoned and clean shapes differ");
  const VectorD amp = amplitude(x);
  SampleRms r;
  std::vector<double> p;
  double amp_sum = 0;
  Index used = 0;
  for (Index d = 0; d < x.variables(); ++d) {
    if (!(amp(d) > 0)) {
      ++r.excluded_variables;
      continue;
    }
    amp_sum += amp(d);
    ++used;
    for (Index t = 0; t < x.valid_length; ++t) p.push_back(poisoned(t, d) - x.values(t, d));
  }
  if (used == 0) throw ConfigError("sample '" + x.sample_id + "' has zero amplitude in every variable");
  const double mean_amp = amp_sum / static_cast<double>(used);
  auto rms = [](auto first, auto last) {
    double s = 0;
    for (auto it = first; it != last; ++it) s += *it * *it;
    return std::sqrt(s / static_cast<double>(last - first));
  };
  r.all = rms(p.begin(), p.end()) / mean_amp;
  const auto k = static_cast<std::ptrdiff_t>(std::ceil(0.01 * static_cast<double>(p.size())));
  std::partial_sort(p.begin(), p.begin() + k, p.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  r.top1 = rms(p.begin(), p.begin() + k) / mean_amp;
  return r;
}

inline RmsStealth rms_stealth(std::span<const TimeSeriesSample* const> originals, std::span<const MatrixD> poisoned) {
  if (originals.size() != poisoned.size()) throw ShapeError("rms_stealth needs one poisoned series per original");
  if (originals.empty()) throw EmptyDatasetError("rms_stealth over no samples");
  RmsStealth r;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    SampleRms s = sample_rms(*originals[i], poisoned[i]);
    r.rms_all += s.all;
    r.rms_top1 += s.top1;
    r.excluded_variables += s.excluded_variables;
  }
  r.samples = originals.size();
  r.rms_all /= static_cast<double>(r.samples);
  r.rms_top1 /= static_cast<double>(r.samples);
  return r;
}

}  // namespace tsba
