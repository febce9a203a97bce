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
#include "tsba/data/folds.hpp"
#include "tsba/defenses/anp.hpp"
#include "tsba/defenses/fine_prune.hpp"
#include "tsba/defenses/neural_cleanse.hpp"
#include "tsba/eval/stealth.hpp"
#include "tsba/nn/zoo.hpp"

#include <limits>
#include <memory>
#include <optional>

namespace tsba {

struct DefenseSettings {
  DefenseKind kind = DefenseKind::none;
  double clean_fraction = 0.2;  // defender's held-out clean share of the training split
  NeuralCleanseConfig nc;
  FinePruneConfig fp;
  AnpConfig anp;
};

struct ExperimentSettings {
  ClassifierArch arch = ClassifierArch::fcn;
  double width = 1.0;            // classifier channel scale
  double generator_width = 1.0;  // trigger-generator channel scale
  AttackKind attack = AttackKind::tsba_a;
  AttackConfig attack_cfg;
  bool clean_baseline = true;
  DefenseSettings defense;
  // Pretrained trigger generator: required for the universal attack; for
  // TSBA-B it replaces co-training (the released generator is reused).
  std::shared_ptr<const Model> generator;
};

struct FoldResult {
  int fold = 0;
  double clean_ca = std::numeric_limits<double>::quiet_NaN();
  double ca = 0;
  double asr = 0;
  double rms_all = 0;
  double rms_top1 = 0;
  std::optional<DefenseReport> defense;
};

// Everything a single train/test run leaves behind.
struct AttackRun {
  FoldResult metrics;
  std::optional<Model> clean;
  Model backdoored;
  std::shared_ptr<const Model> generator;
  Stamp stamp;
  PoisonedDataset poisoned;
  std::optional<TsbaResult> tsba;
  std::optional<Model> defended;
  std::vector<ReversedTrigger> reversed_triggers;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) {
  return Fnv1a().update(role).update(std::to_string(seed)).digest();
}

inline std::pair<Dataset, Dataset> split_off(const Dataset& ds, double fraction, std::uint64_t seed,
                                             const std::string& tag) {
  auto [rest, held] = stratified_holdout(ds, fraction, seed);
  return {subset(ds, rest, ds.name), subset(ds, held, ds.name + "/" + tag)};
}

// Plain training on (possibly poisoned) data. With early stopping on, the
// score is validation CA, or backdoor_selection_score when a stamp is given.
inline void train_victim(Model& f, const Dataset& train, const Dataset* validation, const TrainConfig& cfg,
                         const Stamp* stamp, int target) {
  auto data = labeled(train);
  std::function<double(const Model&)> score;
  if (validation && !validation->empty() && cfg.early_stop.patience > 0) {
    score = [=](const Model& m) {
      const double ca = clean_accuracy(m, *validation);
      return stamp ? backdoor_selection_score(ca, attack_success_rate(m, *stamp, *validation, target)) : ca;
    };
  }
  fit_classifier(f, std::span<const LabeledSeries>(data), cfg, score);
}

}  // namespace detail

// Runs the configured defense on a copy of f with the defender's clean data.
inline DefenseOutcome<Real> apply_defense(const Model& f, const Dataset& defender, const DefenseSettings& d,
                                          std::uint64_t seed, std::vector<ReversedTrigger>* triggers = nullptr) {
  switch (d.kind) {
    case DefenseKind::nc: {
      auto c = d.nc;
      c.seed = detail::derive_seed(seed, "nc");
      return neural_cleanse(f, defender, c, triggers);
    }
    case DefenseKind::fp: {
      auto c = d.fp;
      c.seed = detail::derive_seed(seed, "fp");
      return fine_prune(f, defender, c);
    }
    case DefenseKind::anp: {
      auto c = d.anp;
      c.seed = detail::derive_seed(seed, "anp");
      return anp(f, defender, c);
    }
    case DefenseKind::none: break;
  }
  return DefenseOutcome<Real>{f};
}

// The defender's clean share of a training split, as run_attack carves it.
inline std::pair<Dataset, Dataset> defender_split(const Dataset& train, const DefenseSettings& d, std::uint64_t seed) {
  return detail::split_off(train, d.clean_fraction, detail::derive_seed(seed, "defense"), "defense");
}

// One attack run on a train/test split: optional clean reference model,
// the attack under its threat model, metrics on the test split and an
// optional defense with paired before/after numbers.
inline AttackRun run_attack(const Dataset& train_in, const Dataset& test, const ExperimentSettings& s,
                            std::uint64_t seed) {
  AttackConfig cfg = s.attack_cfg;
  cfg.seed = seed;
  cfg.classifier.seed = detail::derive_seed(seed, "classifier");
  cfg.validate(train_in.num_classes);
  const Index L = train_in.length, D = train_in.variables;
  const int C = train_in.num_classes;

  Dataset train = train_in, defender;
  if (s.defense.kind != DefenseKind::none)
    std::tie(train, defender) = defender_split(train, s.defense, seed);
  Dataset validation;
  const bool early = cfg.classifier.early_stop.patience > 0;
  if (early)
    std::tie(train, validation) =
        detail::split_off(train, cfg.classifier.early_stop.validation_fraction, detail::derive_seed(seed, "validation"), "validation");
  const Dataset* val = early ? &validation : nullptr;

  AttackRun run{.metrics = {}, .clean = std::nullopt, .backdoored = build_classifier<Real>(s.arch, L, D, C, detail::derive_seed(seed, "f"), s.width)};
  if (s.clean_baseline) {
    Model clean = build_classifier<Real>(s.arch, L, D, C, detail::derive_seed(seed, "clean"), s.width);
    detail::train_victim(clean, train, val, cfg.classifier, nullptr, cfg.target_class);
    run.metrics.clean_ca = clean_accuracy(clean, test);
    run.clean = std::move(clean);
  }

  switch (s.attack) {
    case AttackKind::vanilla_fixed:
    case AttackKind::vanilla_random:
    case AttackKind::static_noise: {
      run.stamp = baseline_stamp(s.attack, cfg);
      run.poisoned = poison_dataset(train, run.stamp, cfg);
      detail::train_victim(run.backdoored, run.poisoned.materialize(), val, cfg.classifier, &run.stamp, cfg.target_class);
      break;
    }
    case AttackKind::tsba_a:
    case AttackKind::tsba_b: {
      // For TSBA-B the co-trained classifier is the attacker's surrogate; the
      // victim trains from scratch on the released poisoned set.
      if (s.attack == AttackKind::tsba_b && s.generator) {
        if (s.generator->spec().kind != NetworkKind::trigger_generator || s.generator->spec().input_length != L ||
            s.generator->spec().input_variables != D)
          throw ConfigError("generator checkpoint does not fit this dataset");
        run.generator = s.generator;
        run.stamp = generator_stamp(run.generator, cfg.clip_fraction);
        run.poisoned = poison_dataset(train, run.stamp, cfg);
        detail::train_victim(run.backdoored, run.poisoned.materialize(), val, cfg.classifier, &run.stamp, cfg.target_class);
        break;
      }
      Model f = build_classifier<Real>(s.arch, L, D, C, detail::derive_seed(seed, "f"), s.width);
      auto g = std::make_shared<Model>(build_trigger_generator<Real>(L, D, detail::derive_seed(seed, "g"), s.generator_width));
      run.tsba = train_tsba(f, *g, train, cfg, val);
      run.generator = g;
      run.stamp = generator_stamp(run.generator, cfg.clip_fraction);
      run.poisoned = poison_dataset(train, run.stamp, cfg);
      if (s.attack == AttackKind::tsba_a) {
        run.backdoored = std::move(f);
      } else {
        detail::train_victim(run.backdoored, run.poisoned.materialize(), val, cfg.classifier, &run.stamp, cfg.target_class);
      }
      break;
    }
    case AttackKind::universal: {
      if (!s.generator) throw ConfigError("the universal attack needs a universal generator checkpoint");
      if (s.generator->spec().kind != NetworkKind::universal_generator)
        throw ConfigError("checkpoint is not a universal generator");
      run.generator = s.generator;
      run.stamp = generator_stamp(run.generator, cfg.clip_fraction);
      run.poisoned = poison_dataset(train, run.stamp, cfg);
      detail::train_victim(run.backdoored, run.poisoned.materialize(), val, cfg.classifier, &run.stamp, cfg.target_class);
      break;
    }
  }

  run.metrics.ca = clean_accuracy(run.backdoored, test);
  run.metrics.asr = attack_success_rate(run.backdoored, run.stamp, test, cfg.target_class);
  std::vector<const TimeSeriesSample*> victims;
  for (const auto& x : test.samples)
    if (x.label != cfg.target_class) victims.push_back(&x);
  auto stamped = run.stamp(std::span<const TimeSeriesSample* const>(victims));
  RmsStealth rms = rms_stealth(std::span<const TimeSeriesSample* const>(victims), std::span<const MatrixD>(stamped));
  run.metrics.rms_all = rms.rms_all;
  run.metrics.rms_top1 = rms.rms_top1;

  if (s.defense.kind != DefenseKind::none) {
    DefenseOutcome<Real> outcome = apply_defense(run.backdoored, defender, s.defense, seed, &run.reversed_triggers);
    run.metrics.defense = assess_defense(run.backdoored, outcome, test, run.stamp, cfg.target_class);
    run.defended = std::move(outcome.model);
  }
  return run;
}

}  // namespace tsba
