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

#include "tsba/attacks/budget.hpp"
#include "tsba/nn/loss.hpp"
#include "tsba/nn/network.hpp"

#include <span>
#include <vector>

namespace tsba {

// A batch of anchors prepared for the generator: values, per-element budget
// (zero on padding) and the layout needed to undo a variable split.
template <typename T>
struct GeneratorBatch {
  Activations<T> x;
  Mat<T> budget;
  Index samples = 0;
  Index variables = 0;
  bool split = false;  // one single-variable sequence per (sample, variable)
};

// Stacks anchors; when the generator takes one variable but the data has
// several, each variable becomes its own sequence.
template <typename T>
GeneratorBatch<T> prepare_generator_batch(std::span<const TimeSeriesSample* const> anchors, Index generator_vars,
                                          double fraction) {
  GeneratorBatch<T> gb;
  if (anchors.empty()) return gb;
  const Index L = anchors.front()->length(), D = anchors.front()->variables();
  gb.samples = static_cast<Index>(anchors.size());
  gb.variables = D;
  if (generator_vars == D) {
    gb.split = false;
  } else if (generator_vars == 1) {
    gb.split = true;
  } else {
    throw ShapeError("generator takes " + std::to_string(generator_vars) + " variables, data has " + std::to_string(D));
  }
  const Index rows = gb.split ? 1 : D;
  const Index seqs = gb.split ? gb.samples * D : gb.samples;
  gb.x = Activations<T>{Mat<T>(rows, seqs * L), seqs, L};
  gb.budget = Mat<T>::Zero(rows, seqs * L);
  for (Index b = 0; b < gb.samples; ++b) {
    const TimeSeriesSample& s = *anchors[static_cast<std::size_t>(b)];
    if (s.length() != L || s.variables() != D) throw ShapeError("generator batch members differ in shape");
    const VectorD xi = clip_budget(s, fraction);
    for (Index d = 0; d < D; ++d) {
      const Index seq = gb.split ? b * D + d : b;
      const Index row = gb.split ? 0 : d;
      gb.x.data.block(row, seq * L, 1, L) = s.values.col(d).transpose().template cast<T>();
      gb.budget.block(row, seq * L, 1, s.valid_length).setConstant(static_cast<T>(xi(d)));
    }
  }
  return gb;
}

// Inverse of the split: back to (D x samples*L) layout.
template <typename T>
Mat<T> merge_variables(const GeneratorBatch<T>& gb, const Mat<T>& data) {
  if (!gb.split) return data;
  const Index L = gb.x.length, D = gb.variables;
  Mat<T> out(D, gb.samples * L);
  for (Index b = 0; b < gb.samples; ++b)
    for (Index d = 0; d < D; ++d) out.block(d, b * L, 1, L) = data.block(0, (b * D + d) * L, 1, L);
  return out;
}

template <typename T>
Mat<T> split_variables(const GeneratorBatch<T>& gb, const Mat<T>& data) {
  if (!gb.split) return data;
  const Index L = gb.x.length, D = gb.variables;
  Mat<T> out(1, gb.samples * D * L);
  for (Index b = 0; b < gb.samples; ++b)
    for (Index d = 0; d < D; ++d) out.block(0, (b * D + d) * L, 1, L) = data.block(d, b * L, 1, L);
  return out;
}

// Additive stamping followed by the clip: clamp(x + g(x), x - xi, x + xi).
// inside (optional) marks elements where the clamp was inactive.
template <typename T>
Mat<T> stamp_and_clip(const Mat<T>& x, const Mat<T>& trigger, const Mat<T>& budget, Mat<T>* inside = nullptr) {
  Mat<T> candidate = x + trigger;
  Mat<T> lo = x - budget, hi = x + budget;
  Mat<T> out = candidate.cwiseMax(lo).cwiseMin(hi);
  if (inside) *inside = ((candidate.array() >= lo.array()) && (candidate.array() <= hi.array())).template cast<T>();
  return out;
}

// G_xi for a batch of anchors; returns poisoned values (L x D) per anchor.
template <typename T>
std::vector<MatrixD> apply_generator(const Network<T>& g, std::span<const TimeSeriesSample* const> anchors,
                                     double fraction, std::size_t chunk = 32) {
  std::vector<MatrixD> out;
  out.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); i += chunk) {
    auto part = anchors.subspan(i, std::min(chunk, anchors.size() - i));
    GeneratorBatch<T> gb = prepare_generator_batch<T>(part, g.spec().input_variables, fraction);
    Mat<T> delta = stamp_and_clip<T>(gb.x.data, g.forward(gb.x).data, gb.budget) - gb.x.data;
    delta = merge_variables(gb, delta);
    // The perturbation is added to the double-precision anchor and clamped
    // again there, so the budget holds exactly and a zero trigger is a no-op.
    for (Index b = 0; b < gb.samples; ++b) {
      const TimeSeriesSample& anchor = *part[static_cast<std::size_t>(b)];
      MatrixD candidate =
          anchor.values + delta.middleCols(b * gb.x.length, gb.x.length).transpose().template cast<double>();
      out.push_back(clip_to_budget(candidate, anchor, fraction));
    }
  }
  return out;
}

template <typename T>
MatrixD apply_generator(const Network<T>& g, const TimeSeriesSample& x, double fraction) {
  const TimeSeriesSample* p = &x;
  return apply_generator(g, std::span<const TimeSeriesSample* const>(&p, 1), fraction).front();
}

// One descent step on the generator: minimise CE(f(G_xi(x)), target) with f
// frozen in eval mode. The clamp passes gradient only where inactive.
template <typename T, typename Optimizer>
double generator_step(Network<T>& g, const Network<T>& f, std::span<const TimeSeriesSample* const> anchors,
                      int target, double fraction, Optimizer& opt) {
  GeneratorBatch<T> gb = prepare_generator_batch<T>(anchors, g.spec().input_variables, fraction);
  Workspace<T> gws, fws;
  Mat<T> trigger = g.forward(gb.x, &gws).data;
  Mat<T> inside;
  Mat<T> poisoned = stamp_and_clip<T>(gb.x.data, trigger, gb.budget, &inside);
  Activations<T> fx{merge_variables(gb, poisoned), gb.samples, gb.x.length};
  Activations<T> logits = f.forward(fx, &fws);
  std::vector<int> labels(static_cast<std::size_t>(gb.samples), target);
  LossResult<T> loss = cross_entropy(logits.data, labels);
  Mat<T> dx = f.backward(loss.grad, fws, nullptr);
  Mat<T> dtrigger = split_variables(gb, dx).cwiseProduct(inside);
  Vec<T> grad = Vec<T>::Zero(static_cast<Index>(g.parameter_count()));
  g.backward(dtrigger, gws, grad.data());
  opt.step(g.parameters(), grad);
  return loss.loss;
}

}  // namespace tsba
