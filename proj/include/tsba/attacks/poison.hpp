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

#include "tsba/attacks/baselines.hpp"
#include "tsba/attacks/budget.hpp"
#include "tsba/attacks/config.hpp"
#include "tsba/attacks/generator.hpp"
#include "tsba/core/fs.hpp"
#include "tsba/eval/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace tsba {

struct PoisonRecord {
  std::string sample_id;
  std::size_t index = 0;  // position in the base dataset
  int original_label = 0;
  int assigned_label = 0;
  MatrixD poisoned_values;
  VectorD max_perturbation;  // per variable
};

struct PoisonedDataset {
  Dataset base;
  std::vector<PoisonRecord> records;
  std::vector<std::string> clean_ids;

  // Base dataset with every record's sample replaced by its poisoned,
  // relabelled copy; the rest are untouched copies.
  Dataset materialize() const {
    Dataset out = base;
    out.name = base.name + "+poison";
    for (const auto& r : records) {
      auto& s = out.samples.at(r.index);
      s.values = r.poisoned_values;
      s.label = r.assigned_label;
    }
    return out;
  }
};

// Uniform sample of round(rate*N) distinct indices, sorted.
inline std::vector<std::size_t> select_poison_indices(std::size_t n, double rate, std::uint64_t seed) {
  const std::size_t k = poison_count(rate, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0x504f49534f4eULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline PoisonedDataset poison_dataset(const Dataset& ds, const Stamp& stamp, const AttackConfig& cfg) {
  cfg.validate(ds.num_classes);
  PoisonedDataset pd;
  pd.base = ds;
  auto chosen = select_poison_indices(ds.size(), cfg.poison_rate, cfg.seed);
  std::vector<const TimeSeriesSample*> anchors;
  for (std::size_t i : chosen) anchors.push_back(&ds.samples[i]);
  std::vector<MatrixD> poisoned = stamp(std::span<const TimeSeriesSample* const>(anchors));
  std::vector<bool> is_poisoned(ds.size(), false);
  for (std::size_t j = 0; j < chosen.size(); ++j) {
    const auto& s = ds.samples[chosen[j]];
    if (poisoned[j].rows() != s.values.rows() || poisoned[j].cols() != s.values.cols())
      throw ShapeError("stamp changed the sample shape");
    PoisonRecord r;
    r.sample_id = s.sample_id;
    r.index = chosen[j];
    r.original_label = s.label;
    r.assigned_label = cfg.target_class;
    r.max_perturbation = max_perturbation(poisoned[j], s.values);
    r.poisoned_values = std::move(poisoned[j]);
    pd.records.push_back(std::move(r));
    is_poisoned[chosen[j]] = true;
  }
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!is_poisoned[i]) pd.clean_ids.push_back(ds.samples[i].sample_id);
  return pd;
}

template <typename T>
Stamp generator_stamp(const Network<T>& g, double fraction) {
  return [&g, fraction](std::span<const TimeSeriesSample* const> xs) { return apply_generator(g, xs, fraction); };
}

// Keeps the generator alive for as long as the stamp is.
template <typename T>
Stamp generator_stamp(std::shared_ptr<const Network<T>> g, double fraction) {
  return [g = std::move(g), fraction](std::span<const TimeSeriesSample* const> xs) {
    return apply_generator(*g, xs, fraction);
  };
}

template <typename T>
PoisonedDataset poison_dataset(const Dataset& ds, const Network<T>& g, const AttackConfig& cfg) {
  return poison_dataset(ds, generator_stamp(g, cfg.clip_fraction), cfg);
}

// Stamp for the fixed-pattern baselines. vanilla_random draws its window
// from a generator seeded per sample id, so stamping is reproducible.
inline Stamp baseline_stamp(AttackKind kind, const AttackConfig& cfg) {
  switch (kind) {
    case AttackKind::vanilla_fixed:
      return per_sample_stamp([f = cfg.pattern_fraction](const TimeSeriesSample& x) { return vanilla_fixed(x, f); });
    case AttackKind::vanilla_random:
      return per_sample_stamp([f = cfg.pattern_fraction, seed = cfg.seed](const TimeSeriesSample& x) {
        Rng rng = make_rng(seed, Fnv1a().update(x.sample_id).digest());
        return vanilla_random(x, f, rng);
      });
    case AttackKind::static_noise:
      return per_sample_stamp([tmpl = sinusoid_template(cfg.noise_period), a = cfg.noise_fraction](
                                  const TimeSeriesSample& x) { return static_noise(x, tmpl, a); });
    default:
      throw ConfigError("attack '" + to_string(kind) + "' is not a fixed-pattern baseline");
  }
}

// Poison manifest: settings plus one entry per poisoned sample.
inline nlohmann::json poison_manifest(const PoisonedDataset& pd, const AttackConfig& cfg, const std::string& attack) {
  nlohmann::json j;
  j["attack"] = attack;
  j["seed"] = cfg.seed;
  j["poison_rate"] = cfg.poison_rate;
  j["clip_fraction"] = cfg.clip_fraction;
  j["target_class"] = cfg.target_class;
  j["dataset"] = pd.base.name;
  j["num_samples"] = pd.base.size();
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : pd.records) {
    recs.push_back({{"sample_id", r.sample_id},
                    {"original_label", r.original_label},
                    {"assigned_label", r.assigned_label},
                    {"max_perturbation", std::vector<double>(r.max_perturbation.data(),
                                                             r.max_perturbation.data() + r.max_perturbation.size())}});
  }
  j["poisoned"] = recs;
  return j;
}

inline void write_poison_manifest(const std::filesystem::path& path, const PoisonedDataset& pd, const AttackConfig& cfg,
                                  const std::string& attack) {
  write_text(path, poison_manifest(pd, cfg, attack).dump(2) + "\n");
}

}  // namespace tsba
