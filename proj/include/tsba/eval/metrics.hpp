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
#include "tsba/nn/train.hpp"

#include <functional>
#include <span>
#include <vector>

namespace tsba {

// Maps a batch of clean samples to their poisoned values (same shapes).
using Stamp = std::function<std::vector<MatrixD>(std::span<const TimeSeriesSample* const>)>;

inline Stamp per_sample_stamp(std::function<MatrixD(const TimeSeriesSample&)> fn) {
  return [fn = std::move(fn)](std::span<const TimeSeriesSample* const> xs) {
    std::vector<MatrixD> out;
    out.reserve(xs.size());
    for (const auto* x : xs) out.push_back(fn(*x));
    return out;
  };
}

inline Stamp identity_stamp() {
  return per_sample_stamp([](const TimeSeriesSample& x) { return x.values; });
}

// Percentage of samples whose predicted class equals their label.
template <typename T>
double clean_accuracy(const Network<T>& f, const Dataset& test) {
  if (test.empty()) throw EmptyDatasetError("clean accuracy on an empty test set");
  auto data = labeled(test);
  return accuracy(f, std::span<const LabeledSeries>(data));
}

// Percentage of non-target test samples classified as the target once stamped.
template <typename T>
double attack_success_rate(const Network<T>& f, const Stamp& stamp, const Dataset& test, int target) {
  std::vector<const TimeSeriesSample*> victims;
  for (const auto& s : test.samples)
    if (s.label != target) victims.push_back(&s);
  if (victims.empty()) throw EmptyDatasetError("ASR undefined: every test sample belongs to the target class");
  std::vector<MatrixD> poisoned = stamp(std::span<const TimeSeriesSample* const>(victims));
  if (poisoned.size() != victims.size()) throw ShapeError("stamp returned the wrong number of samples");
  std::vector<const MatrixD*> ptrs;
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    if (poisoned[i].rows() != victims[i]->values.rows() || poisoned[i].cols() != victims[i]->values.cols())
      throw ShapeError("stamp changed the sample shape");
    ptrs.push_back(&poisoned[i]);
  }
  auto pred = predict_labels(f, std::span<const MatrixD* const>(ptrs));
  std::size_t hit = 0;
  for (int p : pred) hit += p == target;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace tsba
