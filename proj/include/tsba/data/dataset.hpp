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
#include "tsba/core/types.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace tsba {

struct TimeSeriesSample {
  MatrixD values;  // length x variables
  int label = 0;
  std::string sample_id;
  Index valid_length = 0;  // timesteps before tail padding; equals rows() when unpadded

  Index length() const { return values.rows(); }
  Index variables() const { return values.cols(); }
  auto valid() const { return values.topRows(valid_length); }
};

struct Dataset {
  std::string name;
  std::vector<TimeSeriesSample> samples;
  int num_classes = 0;
  Index length = 0;
  Index variables = 0;
  // Original label tokens, indexed by the contiguous class id.
  std::vector<std::string> class_labels;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Per-variable max - min over the valid timesteps.
inline VectorD amplitude(const TimeSeriesSample& sample) {
  auto v = sample.valid();
  if (v.rows() == 0) return VectorD::Zero(sample.variables());
  return (v.colwise().maxCoeff() - v.colwise().minCoeff()).transpose();
}

inline VectorD amplitude(const MatrixD& values) {
  return (values.colwise().maxCoeff() - values.colwise().minCoeff()).transpose();
}

// Throws if any TimeSeriesSample/Dataset invariant is violated.
inline void validate(const Dataset& ds) {
  if (ds.empty()) throw EmptyDatasetError("dataset '" + ds.name + "' has no samples");
  if (ds.length < 2) throw ShapeError("series length must be at least 2");
  if (ds.variables < 1) throw ShapeError("series must have at least one variable");
  std::vector<bool> seen(static_cast<std::size_t>(ds.num_classes), false);
  for (const auto& s : ds.samples) {
    if (s.length() != ds.length || s.variables() != ds.variables)
      throw ShapeError("sample '" + s.sample_id + "' has shape (" + std::to_string(s.length()) + ", " +
                       std::to_string(s.variables()) + "), dataset expects (" + std::to_string(ds.length) +
                       ", " + std::to_string(ds.variables) + ")");
    if (!s.values.allFinite()) throw ShapeError("sample '" + s.sample_id + "' contains NaN or Inf");
    if (s.label < 0 || s.label >= ds.num_classes)
      throw ShapeError("sample '" + s.sample_id + "' label out of range");
    if (s.valid_length < 1 || s.valid_length > s.length())
      throw ShapeError("sample '" + s.sample_id + "' has invalid valid_length");
    seen[static_cast<std::size_t>(s.label)] = true;
  }
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (!seen[c]) throw ShapeError("class " + std::to_string(c) + " has no samples");
}

// Dataset restricted to the given sample indices (same class space).
inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string name = {}) {
  Dataset out;
  out.name = name.empty() ? ds.name : std::move(name);
  out.num_classes = ds.num_classes;
  out.length = ds.length;
  out.variables = ds.variables;
  out.class_labels = ds.class_labels;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(ds.samples.at(i));
  return out;
}

// Per-sample z-normalisation over the valid region, applied per variable.
// Not applied at load; callers opt in.
inline void z_normalize(Dataset& ds) {
  for (auto& s : ds.samples) {
    auto v = s.values.topRows(s.valid_length);
    for (Index d = 0; d < v.cols(); ++d) {
      double mean = v.col(d).mean();
      double sd = std::sqrt((v.col(d).array() - mean).square().mean());
      v.col(d).array() -= mean;
      if (sd > 1e-12) v.col(d) /= sd;
    }
  }
}

// Stacks the given samples into channel-major activations.
template <typename T>
Activations<T> to_activations(std::span<const MatrixD* const> series) {
  Activations<T> a;
  a.batch = static_cast<Index>(series.size());
  if (series.empty()) return a;
  a.length = series.front()->rows();
  a.data.resize(series.front()->cols(), a.batch * a.length);
  for (Index b = 0; b < a.batch; ++b) {
    const MatrixD& m = *series[static_cast<std::size_t>(b)];
    if (m.rows() != a.length || m.cols() != a.data.rows()) throw ShapeError("batch members differ in shape");
    a.sample(b) = m.transpose().template cast<T>();
  }
  return a;
}

template <typename T>
Activations<T> to_activations(const MatrixD& series) {
  const MatrixD* p = &series;
  return to_activations<T>(std::span<const MatrixD* const>(&p, 1));
}

template <typename T>
MatrixD sample_values(const Activations<T>& a, Index b) {
  return a.sample(b).transpose().template cast<double>();
}

}  // namespace tsba
