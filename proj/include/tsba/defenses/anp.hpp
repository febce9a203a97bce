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

#include "tsba/defenses/report.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace tsba {

struct AnpConfig {
  double epsilon = 0.4;        // bound on the multiplicative neuron perturbation
  double alpha = 0.2;          // weight of the natural loss
  double learning_rate = 0.2;  // mask step size
  double prune_threshold = 0.2;
  int iterations = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon >= 0)) throw ConfigError("ANP epsilon must be non-negative");
    if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("ANP alpha must be in [0, 1]");
    if (!(prune_threshold >= 0 && prune_threshold <= 1)) throw ConfigError("ANP prune_threshold must be in [0, 1]");
    if (iterations < 0) throw ConfigError("ANP iterations must be non-negative");
  }
};

namespace detail {

struct GateView {
  std::vector<Index> mask, pert;  // state indices
};

template <typename T>
GateView gate_view(const Network<T>& f) {
  GateView v;
  for (const auto& g : f.gate_groups())
    for (Index c = 0; c < g.channels; ++c) {
      v.mask.push_back(static_cast<Index>(g.state_offset) + c);
      v.pert.push_back(static_cast<Index>(g.state_offset) + g.channels + c);
    }
  return v;
}

// CE loss and its gradient with respect to the network state (gate scales).
template <typename T>
T state_loss(const Network<T>& f, const Activations<T>& x, std::span<const int> labels, Vec<T>& state_grad) {
  Workspace<T> ws;
  Activations<T> logits = f.forward(x, &ws);
  LossResult<T> loss = cross_entropy(logits.data, labels);
  state_grad = Vec<T>::Zero(f.state().size());
  f.backward(loss.grad, ws, nullptr, state_grad.data());
  return loss.loss;
}

}  // namespace detail

// Adversarial neuron pruning over every gated neuron. Each neuron's output
// is scaled by (mask + delta) with |delta| <= epsilon; delta takes one
// signed ascent step on the loss, then the mask descends on
// alpha * natural + (1 - alpha) * perturbed loss. Neurons whose mask ends
// below the threshold are pruned, the rest restored to 1.
template <typename T>
DefenseOutcome<T> anp(const Network<T>& f, const Dataset& clean, const AnpConfig& cfg) {
  cfg.validate();
  if (clean.empty()) throw EmptyDatasetError("ANP needs clean data");
  if (f.gate_groups().empty()) throw UnsupportedArchitecture("model has no prunable neurons");
  DefenseOutcome<T> out{f, DefenseKind::anp};
  Network<T> work = f;
  const auto view = detail::gate_view(work);
  const std::size_t n_neurons = view.mask.size();
  Rng rng = make_rng(cfg.seed, 0x414e50ULL);
  Rng noise = make_rng(cfg.seed, 0x414e5001ULL);  // separate stream: epsilon = 0 leaves batches unchanged
  std::uniform_real_distribution<double> init(-cfg.epsilon, cfg.epsilon);
  std::vector<LabeledSeries> data = labeled(clean);
  const auto bs = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), data.size()));
  std::vector<T> mask(n_neurons, T(1));
  Vec<T> g_nat, g_rob;
  std::vector<std::size_t> order;
  std::size_t cursor = data.size();
  try {
    for (int it = 0; it < cfg.iterations; ++it) {
      if (cursor + bs > data.size()) {
        order.resize(data.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      std::vector<const MatrixD*> xs;
      std::vector<int> labels;
      for (std::size_t j = 0; j < bs; ++j) {
        xs.push_back(data[order[cursor + j]].values);
        labels.push_back(data[order[cursor + j]].label);
      }
      cursor += bs;
      Activations<T> x = to_activations<T>(std::span<const MatrixD* const>(xs));
      auto& st = work.state();
      // perturbation: random start, one signed ascent step, projected
      if (cfg.epsilon > 0) {
        for (std::size_t k = 0; k < n_neurons; ++k) st(view.pert[k]) = static_cast<T>(init(noise));
        Vec<T> g;
        detail::state_loss(work, x, labels, g);
        for (std::size_t k = 0; k < n_neurons; ++k) {
          const T step = g(view.pert[k]) > 0 ? T(1) : (g(view.pert[k]) < 0 ? T(-1) : T(0));
          st(view.pert[k]) = std::clamp(st(view.pert[k]) + static_cast<T>(cfg.epsilon) * step,
                                        static_cast<T>(-cfg.epsilon), static_cast<T>(cfg.epsilon));
        }
        T rob = detail::state_loss(work, x, labels, g_rob);
        if (!std::isfinite(static_cast<double>(rob))) throw NumericalDivergence("ANP loss is not finite", cfg.learning_rate, it);
      } else {
        g_rob = Vec<T>::Zero(st.size());
      }
      for (std::size_t k = 0; k < n_neurons; ++k) st(view.pert[k]) = T(0);
      T nat = detail::state_loss(work, x, labels, g_nat);
      if (!std::isfinite(static_cast<double>(nat))) throw NumericalDivergence("ANP loss is not finite", cfg.learning_rate, it);
      const double rob_weight = cfg.epsilon > 0 ? 1.0 - cfg.alpha : 0.0;
      const double nat_weight = cfg.epsilon > 0 ? cfg.alpha : 1.0;
      for (std::size_t k = 0; k < n_neurons; ++k) {
        const double g = nat_weight * g_nat(view.mask[k]) + rob_weight * g_rob(view.mask[k]);
        mask[k] = static_cast<T>(std::clamp(static_cast<double>(mask[k]) - cfg.learning_rate * g, 0.0, 1.0));
        st(view.mask[k]) = mask[k];
      }
    }
  } catch (const NumericalDivergence& e) {
    out.failed = true;
    out.failure = e.what();
    return out;
  }
  std::vector<std::size_t> pruned;
  auto& st = out.model.state();
  for (std::size_t k = 0; k < n_neurons; ++k) {
    if (mask[k] < static_cast<T>(cfg.prune_threshold)) {
      st(view.mask[k]) = T(0);
      pruned.push_back(k);
    }
  }
  out.artifacts["neurons"] = n_neurons;
  out.artifacts["pruned_neurons"] = pruned;
  out.artifacts["mask"] = std::vector<double>(mask.begin(), mask.end());
  return out;
}

}  // namespace tsba
