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

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace tsba {

// One-sided DFT magnitude per variable: (floor(L/2) + 1) x D, unnormalised.
inline MatrixD fourier_magnitude(const MatrixD& x) {
  const Index L = x.rows();
  if (L < 2) throw ShapeError("spectrum needs at least 2 timesteps");
  Eigen::FFT<double> fft;
  MatrixD out(L / 2 + 1, x.cols());
  std::vector<double> in(static_cast<std::size_t>(L));
  std::vector<std::complex<double>> spec;
  for (Index d = 0; d < x.cols(); ++d) {
    for (Index t = 0; t < L; ++t) in[static_cast<std::size_t>(t)] = x(t, d);
    fft.fwd(spec, in);
    for (Index k = 0; k <= L / 2; ++k) out(k, d) = std::abs(spec[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace tsba
