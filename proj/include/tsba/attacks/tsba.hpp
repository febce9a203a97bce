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

#include "tsba/attacks/poison.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace tsba {

struct TsbaEpoch {
  int epoch = 0;
  double generator_loss = 0;
  double classifier_loss = 0;
  double validation_score = -1;  // backdoor_selection_score, when validating
};

struct TsbaHooks {
  // Sees every refreshed poison set: clean anchors and their poisoned values.
  std::function<void(int epoch, std::span<const TimeSeriesSample* const>, const std::vector<MatrixD>&)> audit;
  std::function<void(const TsbaEpoch&)> progress;
};

struct TsbaResult {
  std::vector<std::size_t> poison_indices;
  std::vector<TsbaEpoch> history;
  int best_epoch = -1;
};

namespace detail {

template <typename T>
struct ModelPair {
  Network<T> f, g;
};

inline std::vector<std::vector<const TimeSeriesSample*>> anchor_batches(const std::vector<const TimeSeriesSample*>& anchors,
                                                                        int batch_size, Rng& rng) {
  std::vector<std::vector<const TimeSeriesSample*>> out;
  for (const auto& idx : shuffled_batches(anchors.size(), batch_size, rng)) {
    std::vector<const TimeSeriesSample*> b;
    for (std::size_t i : idx) b.push_back(anchors[i]);
    out.push_back(std::move(b));
  }
  return out;
}

// One inner round: generator pass over the poison anchors, refresh, then one
// classifier epoch over clean data plus the relabelled poisoned copies.
template <typename T, typename OptF, typename OptG>
std::pair<double, double> backdoor_round(Network<T>& f, Network<T>& g, const Dataset& clean,
                                         const std::vector<const TimeSeriesSample*>& anchors, int target,
                                         double fraction, int batch_size, OptF& opt_f, OptG& opt_g, Rng& rng,
                                         const std::function<void(std::span<const TimeSeriesSample* const>,
                                                                  const std::vector<MatrixD>&)>& audit) {
  double gloss = 0;
  auto gb = anchor_batches(anchors, batch_size, rng);
  for (const auto& b : gb) gloss += generator_step(g, f, std::span<const TimeSeriesSample* const>(b), target, fraction, opt_g);
  gloss /= static_cast<double>(std::max<std::size_t>(gb.size(), 1));

  std::vector<MatrixD> poisoned = apply_generator(g, std::span<const TimeSeriesSample* const>(anchors), fraction);
  if (audit) audit(std::span<const TimeSeriesSample* const>(anchors), poisoned);

  std::vector<LabeledSeries> data = labeled(clean);
  for (const auto& p : poisoned) data.push_back({&p, target});
  double floss = train_epoch_ce(f, opt_f, std::span<const LabeledSeries>(data), batch_size, rng);
  return {gloss, floss};
}

}  // namespace detail

// Co-training of a classifier f and a trigger generator g. f is warm-started
// on clean data, then each epoch updates g against the current f, refreshes
// the poisoned samples and updates f on the union. With validation data and a
// positive patience, the best pair under backdoor_selection_score is kept.
template <typename T>
TsbaResult train_tsba(Network<T>& f, Network<T>& g, const Dataset& train, const AttackConfig& cfg,
                      const Dataset* validation = nullptr, const TsbaHooks& hooks = {}) {
  cfg.validate(train.num_classes);
  if (train.empty()) throw EmptyDatasetError("TSBA training on an empty dataset");
  if (f.spec().output_dim != train.num_classes) throw ShapeError("classifier head does not match the class count");

  TsbaResult r;
  r.poison_indices = select_poison_indices(train.size(), cfg.poison_rate, cfg.seed);
  std::vector<const TimeSeriesSample*> anchors;
  for (std::size_t i : r.poison_indices) anchors.push_back(&train.samples[i]);

  Rng rng = make_rng(cfg.seed, 0x54534241ULL);
  Adam<T> opt_f(cfg.classifier.learning_rate);
  Adam<T> opt_g(cfg.generator_learning_rate);
  auto clean = labeled(train);
  for (int e = 0; e < cfg.clean_epochs; ++e)
    train_epoch_ce(f, opt_f, std::span<const LabeledSeries>(clean), cfg.classifier.batch_size, rng);

  const int patience = validation && !validation->empty() ? cfg.classifier.early_stop.patience : 0;
  EarlyStopper<detail::ModelPair<T>> stopper(patience);
  for (int e = 0; e < cfg.backdoor_epochs; ++e) {
    TsbaEpoch log;
    log.epoch = e;
    auto audit = [&](std::span<const TimeSeriesSample* const> a, const std::vector<MatrixD>& p) {
      if (hooks.audit) hooks.audit(e, a, p);
    };
    std::tie(log.generator_loss, log.classifier_loss) = detail::backdoor_round(
        f, g, train, anchors, cfg.target_class, cfg.clip_fraction, cfg.classifier.batch_size, opt_f, opt_g, rng, audit);
    if (stopper.enabled()) {
      const double ca = clean_accuracy(f, *validation);
      const double asr = attack_success_rate(f, generator_stamp(g, cfg.clip_fraction), *validation, cfg.target_class);
      log.validation_score = backdoor_selection_score(ca, asr);
      if (stopper.observe(log.validation_score, detail::ModelPair<T>{f, g})) r.best_epoch = e;
    }
    r.history.push_back(log);
    if (hooks.progress) hooks.progress(log);
    if (stopper.stop()) break;
  }
  if (stopper.enabled() && stopper.best()) {
    f = stopper.best()->f;
    g = stopper.best()->g;
  } else {
    r.best_epoch = static_cast<int>(r.history.size()) - 1;
  }
  return r;
}

}  // namespace tsba
