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

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace tsba {

using Index = Eigen::Index;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatrixD = Mat<double>;
using VectorD = Vec<double>;

// Scalar used by the training pipelines. Gradient checks instantiate double.
using Real = float;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

// A batch of equally shaped series laid out channel-major: data is
// (channels x batch*length) and sample b occupies columns [b*length, (b+1)*length).
template <typename T>
struct Activations {
  Mat<T> data;
  Index batch = 0;
  Index length = 0;

  Index channels() const { return data.rows(); }
  auto sample(Index b) { return data.middleCols(b * length, length); }
  auto sample(Index b) const { return data.middleCols(b * length, length); }
};

}  // namespace tsba
