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
#include <numeric>
#include <vector>

namespace tsba {

struct FinePruneConfig {
  double prune_rate = 0.30;
  int finetune_epochs = 10;
  double learning_rate = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(prune_rate >= 0 && prune_rate < 1)) throw ConfigError("prune_rate must be in [0, 1)");
    if (finetune_epochs < 0) throw ConfigError("finetune_epochs must be non-negative");
  }
};

// Mean |activation| of each channel of the last gated feature map over data.
template <typename T>
VectorD channel_activity(const Network<T>& f, const Dataset& data, std::size_t chunk = 32) {
  if (f.gate_groups().empty()) throw UnsupportedArchitecture("model has no prunable feature layer");
  const GateGroup& last = f.gate_groups().back();
  VectorD sum = VectorD::Zero(last.channels);
  double count = 0;
  auto ptrs = detail::sample_ptrs(data);
  for (std::size_t i = 0; i < ptrs.size(); i += chunk) {
    std::span<const MatrixD* const> part(ptrs.data() + i, std::min(chunk, ptrs.size() - i));
    Workspace<T> ws;
    f.forward(to_activations<T>(part), &ws);
    const Mat<T>& feat = ws.feature.data;
    if (feat.rows() != last.channels) throw ShapeError("feature layer and last gate disagree on channel count");
    sum += feat.cwiseAbs().rowwise().sum().template cast<double>();
    count += static_cast<double>(feat.cols());
  }
  return sum / std::max(count, 1.0);
}

// Channels of the last feature layer, least active first (ties by index).
template <typename T>
std::vector<Index> dormant_order(const Network<T>& f, const Dataset& data) {
  VectorD act = channel_activity(f, data);
  std::vector<Index> order(static_cast<std::size_t>(act.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return act(a) < act(b); });
  return order;
}

template <typename T>
void prune_channels(Network<T>& f, const GateGroup& group, std::span<const Index> channels) {
  for (Index c : channels) f.state()(static_cast<Index>(group.state_offset) + c) = T(0);
}

// Zeroes the floor(rate * channels) least active channels of the last
// feature layer, then fine-tunes the rest on the clean data.
template <typename T>
DefenseOutcome<T> fine_prune(const Network<T>& f, const Dataset& clean, const FinePruneConfig& cfg) {
  cfg.validate();
  if (clean.empty()) throw EmptyDatasetError("fine-pruning needs clean data");
  DefenseOutcome<T> out{f, DefenseKind::fp};
  const GateGroup group = f.gate_groups().back();
  const auto k = static_cast<std::size_t>(std::floor(cfg.prune_rate * static_cast<double>(group.channels)));
  std::vector<Index> order = dormant_order(f, clean);
  order.resize(k);
  std::sort(order.begin(), order.end());
  prune_channels(out.model, group, std::span<const Index>(order));
  out.artifacts["pruned_channels"] = order;
  out.artifacts["channels"] = group.channels;
  if (cfg.finetune_epochs > 0) {
    Adam<T> opt(cfg.learning_rate);
    Rng rng = make_rng(cfg.seed, 0x4650ULL);
    auto data = labeled(clean);
    try {
      for (int e = 0; e < cfg.finetune_epochs; ++e)
        train_epoch_ce(out.model, opt, std::span<const LabeledSeries>(data), cfg.batch_size, rng);
    } catch (const NumericalDivergence& err) {
      return DefenseOutcome<T>{f, DefenseKind::fp, true, err.what(), out.artifacts};
    }
  }
  return out;
}

}  // namespace tsba
