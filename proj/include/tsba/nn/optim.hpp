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

namespace tsba {

// Adaptive-moment gradient descent over a flat parameter vector.
template <typename T>
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Vec<T>& params, const Vec<T>& grad) {
    if (m_.size() != params.size()) {
      m_ = Vec<T>::Zero(params.size());
      v_ = Vec<T>::Zero(params.size());
      t_ = 0;
    }
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    m_ = b1 * m_ + (T(1) - b1) * grad;
    v_ = b2 * v_ + (T(1) - b2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const T step = static_cast<T>(lr_ * std::sqrt(c2) / c1);
    params.array() -= step * m_.array() / (v_.array().sqrt() + static_cast<T>(eps_ * std::sqrt(c2)));
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  void reset() { t_ = 0; m_.resize(0); v_.resize(0); }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Vec<T> m_, v_;
};

template <typename T>
class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(Vec<T>& params, const Vec<T>& grad) { params -= static_cast<T>(lr_) * grad; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_;
};

}  // namespace tsba
