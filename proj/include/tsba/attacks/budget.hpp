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

namespace tsba {

// Per-variable budget xi_d = fraction * amplitude(anchor)_d.
inline VectorD clip_budget(const TimeSeriesSample& anchor, double fraction) { return fraction * amplitude(anchor); }

// Clamps candidate into [anchor - xi, anchor + xi] elementwise over the valid
// region; padded timesteps are copied from the anchor.
inline MatrixD clip_to_budget(const MatrixD& candidate, const TimeSeriesSample& anchor, double fraction) {
  if (candidate.rows() != anchor.values.rows() || candidate.cols() != anchor.values.cols())
    throw ShapeError("candidate and anchor shapes differ");
  const VectorD xi = clip_budget(anchor, fraction);
  MatrixD out = anchor.values;
  for (Index d = 0; d < out.cols(); ++d)
    for (Index t = 0; t < anchor.valid_length; ++t)
      out(t, d) = std::clamp(candidate(t, d), anchor.values(t, d) - xi(d), anchor.values(t, d) + xi(d));
  return out;
}

// Largest per-variable |poisoned - original|.
inline VectorD max_perturbation(const MatrixD& poisoned, const MatrixD& original) {
  return (poisoned - original).cwiseAbs().colwise().maxCoeff().transpose();
}

// Largest amount by which any variable exceeds fraction * amplitude (<= 0 when within budget).
inline double budget_excess(const MatrixD& poisoned, const TimeSeriesSample& original, double fraction) {
  return (max_perturbation(poisoned, original.values) - clip_budget(original, fraction)).maxCoeff();
}

}  // namespace tsba
