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

#include "tsba/core/types.hpp"

#include <cmath>
#include <span>

namespace tsba {

// Column-wise softmax of (classes x batch) logits.
template <typename T>
Mat<T> softmax(const Mat<T>& logits) {
  Mat<T> p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

template <typename T>
struct LossResult {
  double loss = 0;  // mean over the batch
  Mat<T> grad;      // d(mean loss)/d(logits)
};

// Mean cross-entropy of softmax(logits) against integer labels.
template <typename T>
LossResult<T> cross_entropy(const Mat<T>& logits, std::span<const int> labels) {
  const Index B = logits.cols();
  LossResult<T> r;
  Mat<T> shifted = logits.rowwise() - logits.colwise().maxCoeff();
  Eigen::Array<T, 1, Eigen::Dynamic> lse = shifted.array().exp().colwise().sum().log();
  r.grad = softmax(logits);
  double total = 0;
  for (Index b = 0; b < B; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    total += static_cast<double>(lse(b) - shifted(y, b));
    r.grad(y, b) -= T(1);
  }
  r.loss = total / static_cast<double>(B);
  r.grad /= static_cast<T>(B);
  return r;
}

}  // namespace tsba
