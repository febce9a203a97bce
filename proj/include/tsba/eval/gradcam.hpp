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
#include "tsba/nn/network.hpp"

#include <algorithm>

namespace tsba {

// Linear resampling of a 1D map to n points (endpoints aligned).
inline VectorD resample_linear(const VectorD& v, Index n) {
  if (v.size() == n) return v;
  VectorD out(n);
  if (v.size() == 1 || n == 1) return VectorD::Constant(n, v.size() ? v(0) : 0.0);
  const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(n - 1);
  for (Index i = 0; i < n; ++i) {
    const double pos = scale * static_cast<double>(i);
    const auto lo = std::min<Index>(static_cast<Index>(pos), v.size() - 2);
    const double w = pos - static_cast<double>(lo);
    out(i) = (1 - w) * v(lo) + w * v(lo + 1);
  }
  return out;
}

// Grad-CAM over the last convolutional feature map, for class c's logit.
// Returns a length-L map scaled into [0, 1] (all zeros if nothing fires).
template <typename T>
VectorD grad_cam_1d(const Network<T>& f, const MatrixD& x, int c) {
  if (!f.has_conv_features())
    throw UnsupportedArchitecture("Grad-CAM needs a convolutional feature layer; " + to_string(f.spec().kind) +
                                  " has none");
  if (c < 0 || c >= f.spec().output_dim) throw ConfigError("Grad-CAM class out of range");
  Workspace<T> ws;
  Activations<T> logits = f.forward(to_activations<T>(x), &ws);
  Mat<T> seed = Mat<T>::Zero(logits.data.rows(), logits.data.cols());
  seed(c, 0) = T(1);
  Mat<T> fgrad;
  f.backward(seed, ws, nullptr, nullptr, &fgrad);
  const Mat<T>& feat = ws.feature.data;  // channels x L'
  const Eigen::Matrix<T, Eigen::Dynamic, 1> weights = fgrad.rowwise().mean();
  VectorD cam = (weights.transpose() * feat).transpose().template cast<double>().cwiseMax(0.0);
  cam = resample_linear(cam, x.rows());
  const double peak = cam.maxCoeff();
  if (peak > 0) cam /= peak;
  return cam;
}

}  // namespace tsba
