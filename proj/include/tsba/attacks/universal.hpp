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

#include "tsba/attacks/tsba.hpp"
#include "tsba/nn/zoo.hpp"

#include <memory>
#include <vector>

namespace tsba {

// Datasets sharing one global label space: dataset i's class c maps to
// offsets[i] + c.
struct MergedLabels {
  std::vector<int> offsets;
  int total = 0;

  explicit MergedLabels(std::span<const Dataset> datasets) {
    for (const auto& d : datasets) {
      offsets.push_back(total);
      total += d.num_classes;
    }
  }
};

inline Dataset relabel(const Dataset& ds, int offset, int total) {
  Dataset out = ds;
  for (auto& s : out.samples) s.label += offset;
  out.num_classes = total;
  return out;
}

struct UniversalConfig {
  int iterations = 200;  // T_u
  ClassifierArch arch = ClassifierArch::fcn;
  double width = 1.0;
  AttackConfig attack;  // poison rate, clip fraction, warm-start epochs, optimiser
};

struct UniversalIteration {
  int iteration = 0;
  std::size_t dataset = 0;
  int target = 0;
  double generator_loss = 0;
  double classifier_loss = 0;
};

struct UniversalHooks {
  std::function<void(const UniversalIteration&)> progress;
  std::function<void(int, std::span<const TimeSeriesSample* const>, const std::vector<MatrixD>&)> audit;
};

// Each iteration draws a dataset and a global target class, then runs one
// co-training round against that dataset's own classifier (warm-started once,
// head sized to the merged label space).
template <typename T>
void train_universal(Network<T>& g, std::span<const Dataset> datasets, const UniversalConfig& cfg,
                     const UniversalHooks& hooks = {}) {
  if (cfg.iterations < 0) throw ConfigError("universal iterations must be non-negative");
  if (cfg.iterations == 0) return;
  if (datasets.empty()) throw ConfigError("universal training needs at least one dataset");
  const Index D = g.spec().input_variables;
  for (const auto& d : datasets) {
    if (d.variables != D)
      throw ConfigError("dataset '" + d.name + "' has " + std::to_string(d.variables) +
                        " variables; the universal generator takes " + std::to_string(D));
    if (d.empty()) throw EmptyDatasetError("dataset '" + d.name + "' is empty");
  }
  MergedLabels merged(datasets);
  const AttackConfig& ac = cfg.attack;
  ac.classifier.validate();
  Rng rng = make_rng(ac.seed, 0x554e4956ULL);

  std::vector<Dataset> relabelled;
  std::vector<Network<T>> classifiers;
  std::vector<Adam<T>> opts;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    relabelled.push_back(relabel(datasets[i], merged.offsets[i], merged.total));
    classifiers.push_back(build_classifier<T>(cfg.arch, datasets[i].length, D, merged.total,
                                              ac.seed * 31 + i + 1, cfg.width));
    opts.emplace_back(ac.classifier.learning_rate);
    auto clean = labeled(relabelled.back());
    for (int e = 0; e < ac.clean_epochs; ++e)
      train_epoch_ce(classifiers.back(), opts.back(), std::span<const LabeledSeries>(clean), ac.classifier.batch_size,
                     rng);
  }

  Adam<T> opt_g(ac.generator_learning_rate);
  std::uniform_int_distribution<std::size_t> pick_dataset(0, datasets.size() - 1);
  std::uniform_int_distribution<int> pick_target(0, merged.total - 1);
  for (int it = 0; it < cfg.iterations; ++it) {
    UniversalIteration log;
    log.iteration = it;
    log.dataset = pick_dataset(rng);
    log.target = pick_target(rng);
    const Dataset& ds = relabelled[log.dataset];
    const std::size_t k = poison_count(ac.poison_rate, ds.size());
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<const TimeSeriesSample*> anchors;
    for (std::size_t j = 0; j < k; ++j) anchors.push_back(&ds.samples[idx[j]]);
    auto audit = [&](std::span<const TimeSeriesSample* const> a, const std::vector<MatrixD>& p) {
      if (hooks.audit) hooks.audit(it, a, p);
    };
    std::tie(log.generator_loss, log.classifier_loss) =
        detail::backdoor_round(classifiers[log.dataset], g, ds, anchors, log.target, ac.clip_fraction,
                               ac.classifier.batch_size, opts[log.dataset], opt_g, rng, audit);
    if (hooks.progress) hooks.progress(log);
  }
}

}  // namespace tsba
