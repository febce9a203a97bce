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

#include "tsba/cli/flat_config.hpp"
#include "tsba/data/synthetic.hpp"
#include "tsba/eval/report.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tsba {

inline constexpr const char* kArtifactVersion = "tsbalab-1";

enum class DatasetKind { synthetic, ucr, multivariate };

inline DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "synthetic") return DatasetKind::synthetic;
  if (s == "ucr") return DatasetKind::ucr;
  if (s == "multivariate") return DatasetKind::multivariate;
  throw ConfigError("unknown dataset.kind '" + s + "'");
}

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synthetic;
  SyntheticSpec synthetic;
  double test_fraction = 0.5;  // synthetic and multivariate holdout share
  std::string name;            // ucr: file prefix
  std::filesystem::path path;  // ucr: directory with <name>_TRAIN.tsv / <name>_TEST.tsv; multivariate: manifest
  bool normalize = false;
};

enum class Protocol { holdout, kfold };

struct ExperimentConfig {
  DatasetConfig dataset;
  Protocol protocol = Protocol::holdout;
  int folds = 10;
  ExperimentSettings settings;
  std::filesystem::path generator_checkpoint;  // tsba_b (optional) and universal (required)
  // universal-train
  std::vector<std::filesystem::path> universal_datasets;
  int universal_iterations = 200;
  double universal_width = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  FlatConfig source;
};

// A loaded dataset plus the split the protocol uses.
struct LoadedData {
  Dataset all;
  std::optional<Dataset> train, test;  // set for holdout
};

namespace detail {

inline DatasetConfig read_dataset(const FlatConfig& c) {
  DatasetConfig d;
  d.kind = parse_dataset_kind(c.str("dataset.kind", "synthetic"));
  auto& s = d.synthetic;
  s.classes = static_cast<int>(c.integer("dataset.synthetic.classes", s.classes));
  s.per_class = static_cast<int>(c.integer("dataset.synthetic.per_class", s.per_class));
  s.length = c.integer("dataset.synthetic.length", s.length);
  s.variables = c.integer("dataset.synthetic.variables", s.variables);
  s.family = static_cast<int>(c.integer("dataset.synthetic.family", s.family));
  s.noise = c.num("dataset.synthetic.noise", s.noise);
  s.transient_rate = c.num("dataset.synthetic.transient_rate", s.transient_rate);
  s.seed = static_cast<std::uint64_t>(c.integer("dataset.synthetic.seed", 0));
  d.test_fraction = c.num("dataset.test_fraction", d.test_fraction);
  d.name = c.str("dataset.name", "");
  d.path = c.path("dataset.path");
  d.normalize = c.flag("dataset.normalize", false);
  return d;
}

inline void check_unused(const FlatConfig& c) {
  auto unused = c.unused_keys();
  if (unused.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const auto& k : unused) msg += " " + k;
  throw ConfigError(msg);
}

inline void validate_dataset(const DatasetConfig& d) {
  switch (d.kind) {
    case DatasetKind::synthetic:
      if (!(d.test_fraction > 0 && d.test_fraction < 1)) throw ConfigError("dataset.test_fraction must be in (0, 1)");
      break;
    case DatasetKind::ucr:
      if (d.name.empty()) throw ConfigError("dataset.name is required for ucr datasets");
      for (const char* part : {"_TRAIN.tsv", "_TEST.tsv"}) {
        auto p = d.path / (d.name + part);
        if (!std::filesystem::exists(p)) throw ConfigError("missing dataset file " + p.string());
      }
      break;
    case DatasetKind::multivariate:
      if (!std::filesystem::exists(d.path)) throw ConfigError("missing manifest " + d.path.string());
      if (!(d.test_fraction > 0 && d.test_fraction < 1)) throw ConfigError("dataset.test_fraction must be in (0, 1)");
      break;
  }
}

}  // namespace detail

// Dataset-only config files (used as universal-train inputs).
inline DatasetConfig load_dataset_config(const std::filesystem::path& path) {
  FlatConfig c = FlatConfig::load(path);
  DatasetConfig d = detail::read_dataset(c);
  detail::check_unused(c);
  detail::validate_dataset(d);
  return d;
}

// Reads and validates everything up front, so no stage starts on a bad config.
inline ExperimentConfig parse_experiment(const FlatConfig& c) {
  ExperimentConfig e;
  e.source = c;
  e.dataset = detail::read_dataset(c);
  const std::string protocol = c.str("protocol", "holdout");
  if (protocol == "holdout") e.protocol = Protocol::holdout;
  else if (protocol == "kfold") e.protocol = Protocol::kfold;
  else throw ConfigError("protocol must be holdout or kfold");
  e.folds = static_cast<int>(c.integer("folds", e.folds));

  auto& s = e.settings;
  s.arch = parse_arch(c.str("classifier.arch", "fcn"));
  s.width = c.num("classifier.width", s.width);
  auto& a = s.attack_cfg;
  auto& t = a.classifier;
  t.epochs = static_cast<int>(c.integer("classifier.epochs", 500));
  t.batch_size = static_cast<int>(c.integer("classifier.batch_size", t.batch_size));
  t.learning_rate = c.num("classifier.learning_rate", t.learning_rate);
  t.early_stop.patience = static_cast<int>(c.integer("classifier.patience", 50));
  t.early_stop.validation_fraction = c.num("classifier.validation_fraction", t.early_stop.validation_fraction);
  s.clean_baseline = c.flag("clean_baseline", true);

  s.attack = parse_attack(c.str("attack.kind", "tsba_a"));
  a.poison_rate = c.num("attack.poison_rate", a.poison_rate);
  a.clip_fraction = c.num("attack.clip_fraction", a.clip_fraction);
  a.target_class = static_cast<int>(c.integer("attack.target_class", a.target_class));
  a.clean_epochs = static_cast<int>(c.integer("attack.clean_epochs", a.clean_epochs));
  a.backdoor_epochs = static_cast<int>(c.integer("attack.backdoor_epochs", a.backdoor_epochs));
  a.generator_learning_rate = c.num("attack.generator_learning_rate", a.generator_learning_rate);
  a.pattern_fraction = c.num("attack.pattern_fraction", a.pattern_fraction);
  a.noise_fraction = c.num("attack.noise_fraction", a.noise_fraction);
  a.noise_period = c.integer("attack.noise_period", a.noise_period);
  s.generator_width = c.num("attack.generator_width", s.generator_width);
  e.generator_checkpoint = c.path("attack.generator");

  auto& d = s.defense;
  d.kind = parse_defense(c.str("defense.kind", "none"));
  d.clean_fraction = c.num("defense.clean_fraction", d.clean_fraction);
  d.nc.lambda = c.num("defense.nc.lambda", d.nc.lambda);
  d.nc.steps = static_cast<int>(c.integer("defense.nc.steps", d.nc.steps));
  d.nc.learning_rate = c.num("defense.nc.learning_rate", d.nc.learning_rate);
  d.nc.anomaly_threshold = c.num("defense.nc.threshold", d.nc.anomaly_threshold);
  d.nc.unlearn = c.flag("defense.nc.unlearn", d.nc.unlearn);
  d.nc.unlearn_epochs = static_cast<int>(c.integer("defense.nc.unlearn_epochs", d.nc.unlearn_epochs));
  d.fp.prune_rate = c.num("defense.fp.prune_rate", d.fp.prune_rate);
  d.fp.finetune_epochs = static_cast<int>(c.integer("defense.fp.finetune_epochs", d.fp.finetune_epochs));
  d.fp.learning_rate = c.num("defense.fp.learning_rate", d.fp.learning_rate);
  d.anp.epsilon = c.num("defense.anp.epsilon", d.anp.epsilon);
  d.anp.alpha = c.num("defense.anp.alpha", d.anp.alpha);
  d.anp.prune_threshold = c.num("defense.anp.prune_threshold", d.anp.prune_threshold);
  d.anp.iterations = static_cast<int>(c.integer("defense.anp.iterations", d.anp.iterations));

  for (const auto& p : c.list("universal.datasets")) {
    std::filesystem::path q = p;
    e.universal_datasets.push_back(q.is_absolute() ? q : c.base() / q);
  }
  e.universal_iterations = static_cast<int>(c.integer("universal.iterations", e.universal_iterations));
  e.universal_width = c.num("universal.width", e.universal_width);

  const long long seed = c.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  e.seed = static_cast<std::uint64_t>(seed);
  e.out = c.path("out");
  detail::check_unused(c);

  detail::validate_dataset(e.dataset);
  if (e.protocol == Protocol::kfold && e.folds < 2) throw ConfigError("folds must be >= 2");
  if (!(s.width > 0 && s.generator_width > 0 && e.universal_width > 0)) throw ConfigError("widths must be positive");
  if (!(d.clean_fraction > 0 && d.clean_fraction < 1)) throw ConfigError("defense.clean_fraction must be in (0, 1)");
  if (!(t.early_stop.validation_fraction > 0 && t.early_stop.validation_fraction < 1))
    throw ConfigError("classifier.validation_fraction must be in (0, 1)");
  if (t.early_stop.patience < 0) throw ConfigError("classifier.patience must be non-negative");
  if (e.universal_iterations < 0) throw ConfigError("universal.iterations must be non-negative");
  t.validate();
  if (!(a.poison_rate > 0 && a.poison_rate <= 1)) throw ConfigError("attack.poison_rate must be in (0, 1]");
  if (!(a.clip_fraction >= 0 && a.clip_fraction <= 1)) throw ConfigError("attack.clip_fraction must be in [0, 1]");
  if (a.target_class < 0) throw ConfigError("attack.target_class must be non-negative");
  if (a.clean_epochs < 0 || a.backdoor_epochs < 0) throw ConfigError("epoch budgets must be non-negative");
  if (!(a.pattern_fraction > 0 && a.pattern_fraction <= 1)) throw ConfigError("attack.pattern_fraction must be in (0, 1]");
  if (a.noise_period < 2) throw ConfigError("attack.noise_period must be >= 2");
  if (s.attack == AttackKind::universal && e.generator_checkpoint.empty())
    throw ConfigError("attack.generator is required for the universal attack");
  if (!e.generator_checkpoint.empty() && !std::filesystem::exists(e.generator_checkpoint))
    throw ConfigError("missing generator checkpoint " + e.generator_checkpoint.string());
  d.fp.validate();
  d.anp.validate();
  if (d.nc.steps < 1 || d.anp.iterations < 1) throw ConfigError("defense step counts must be >= 1");
  return e;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return parse_experiment(FlatConfig::load(path));
}

inline Dataset load_dataset(const DatasetConfig& d, std::optional<std::size_t>* train_count = nullptr) {
  Dataset ds;
  switch (d.kind) {
    case DatasetKind::synthetic:
      ds = make_synthetic(d.synthetic);
      break;
    case DatasetKind::ucr: {
      // Train and test share one label map; ids number the samples train first.
      std::stringstream both;
      std::size_t n_train = 0;
      for (const char* part : {"_TRAIN.tsv", "_TEST.tsv"}) {
        std::ifstream in(d.path / (d.name + part));
        if (!in) throw IoError("cannot open " + (d.path / (d.name + part)).string());
        std::string line;
        while (std::getline(in, line)) {
          if (detail::trim(line).empty()) continue;
          both << line << '\n';
          if (part[2] == 'R') ++n_train;
        }
      }
      ds = parse_univariate_tsv(both, d.name);
      if (train_count) *train_count = n_train;
      break;
    }
    case DatasetKind::multivariate:
      ds = load_multivariate(d.path);
      break;
  }
  if (d.normalize) z_normalize(ds);
  validate(ds);
  return ds;
}

// Holdout splits use the file split for UCR data, a seeded stratified split otherwise.
inline LoadedData load_data(const ExperimentConfig& e) {
  LoadedData out;
  std::optional<std::size_t> n_train;
  out.all = load_dataset(e.dataset, &n_train);
  if (e.settings.attack_cfg.target_class >= out.all.num_classes)
    throw ConfigError("attack.target_class exceeds the dataset's class count");
  if (e.protocol == Protocol::kfold) return out;
  std::vector<std::size_t> tr, te;
  if (n_train) {
    for (std::size_t i = 0; i < out.all.size(); ++i) (i < *n_train ? tr : te).push_back(i);
  } else {
    std::tie(tr, te) = stratified_holdout(out.all, e.dataset.test_fraction, detail::derive_seed(e.seed, "test"));
  }
  out.train = subset(out.all, tr);
  out.test = subset(out.all, te);
  return out;
}

inline std::string dataset_hash(const Dataset& ds) {
  Fnv1a h;
  h.update(ds.name);
  for (const auto& s : ds.samples) {
    h.update(s.sample_id);
    const std::int64_t meta[] = {s.label, static_cast<std::int64_t>(s.valid_length), s.values.rows(), s.values.cols()};
    h.update_values(std::span<const std::int64_t>(meta));
    h.update_values(std::span<const double>(s.values.data(), static_cast<std::size_t>(s.values.size())));
  }
  return hex64(h.digest());
}

// Every effective setting, defaults included, under the config key names.
inline nlohmann::json resolved_config(const ExperimentConfig& e) {
  const auto& d = e.dataset;
  const auto& s = e.settings;
  const auto& a = s.attack_cfg;
  const auto& t = a.classifier;
  const auto& df = s.defense;
  nlohmann::json j;
  j["dataset.kind"] = d.kind == DatasetKind::synthetic ? "synthetic" : d.kind == DatasetKind::ucr ? "ucr" : "multivariate";
  if (d.kind == DatasetKind::synthetic) {
    j["dataset.synthetic.classes"] = d.synthetic.classes;
    j["dataset.synthetic.per_class"] = d.synthetic.per_class;
    j["dataset.synthetic.length"] = d.synthetic.length;
    j["dataset.synthetic.variables"] = d.synthetic.variables;
    j["dataset.synthetic.family"] = d.synthetic.family;
    j["dataset.synthetic.noise"] = d.synthetic.noise;
    j["dataset.synthetic.transient_rate"] = d.synthetic.transient_rate;
    j["dataset.synthetic.seed"] = d.synthetic.seed;
  } else {
    j["dataset.path"] = d.path.string();
    j["dataset.name"] = d.name;
  }
  j["dataset.test_fraction"] = d.test_fraction;
  j["dataset.normalize"] = d.normalize;
  j["protocol"] = e.protocol == Protocol::holdout ? "holdout" : "kfold";
  j["folds"] = e.folds;
  j["clean_baseline"] = s.clean_baseline;
  j["classifier.arch"] = to_string(s.arch);
  j["classifier.width"] = s.width;
  j["classifier.epochs"] = t.epochs;
  j["classifier.batch_size"] = t.batch_size;
  j["classifier.learning_rate"] = t.learning_rate;
  j["classifier.patience"] = t.early_stop.patience;
  j["classifier.validation_fraction"] = t.early_stop.validation_fraction;
  j["attack.kind"] = to_string(s.attack);
  j["attack.poison_rate"] = a.poison_rate;
  j["attack.clip_fraction"] = a.clip_fraction;
  j["attack.target_class"] = a.target_class;
  j["attack.clean_epochs"] = a.clean_epochs;
  j["attack.backdoor_epochs"] = a.backdoor_epochs;
  j["attack.generator_learning_rate"] = a.generator_learning_rate;
  j["attack.generator_width"] = s.generator_width;
  j["attack.pattern_fraction"] = a.pattern_fraction;
  j["attack.noise_fraction"] = a.noise_fraction;
  j["attack.noise_period"] = a.noise_period;
  j["attack.generator"] = e.generator_checkpoint.string();
  j["defense.kind"] = to_string(df.kind);
  j["defense.clean_fraction"] = df.clean_fraction;
  j["defense.nc.lambda"] = df.nc.lambda;
  j["defense.nc.steps"] = df.nc.steps;
  j["defense.nc.learning_rate"] = df.nc.learning_rate;
  j["defense.nc.threshold"] = df.nc.anomaly_threshold;
  j["defense.nc.unlearn"] = df.nc.unlearn;
  j["defense.nc.unlearn_epochs"] = df.nc.unlearn_epochs;
  j["defense.fp.prune_rate"] = df.fp.prune_rate;
  j["defense.fp.finetune_epochs"] = df.fp.finetune_epochs;
  j["defense.fp.learning_rate"] = df.fp.learning_rate;
  j["defense.anp.epsilon"] = df.anp.epsilon;
  j["defense.anp.alpha"] = df.anp.alpha;
  j["defense.anp.prune_threshold"] = df.anp.prune_threshold;
  j["defense.anp.iterations"] = df.anp.iterations;
  nlohmann::json uds = nlohmann::json::array();
  for (const auto& p : e.universal_datasets) uds.push_back(p.string());
  j["universal.datasets"] = uds;
  j["universal.iterations"] = e.universal_iterations;
  j["universal.width"] = e.universal_width;
  j["seed"] = e.seed;
  j["out"] = e.out.string();
  return j;
}

// Reproducibility record: resolved config, seed, version and data hash.
inline nlohmann::json run_record(const ExperimentConfig& e, const Dataset& ds, const std::string& verb) {
  return {{"verb", verb},
          {"artifact_version", kArtifactVersion},
          {"seed", e.seed},
          {"config", resolved_config(e)},
          {"dataset", {{"name", ds.name}, {"samples", ds.size()}, {"classes", ds.num_classes},
                       {"length", ds.length}, {"variables", ds.variables}, {"content_hash", dataset_hash(ds)}}}};
}

}  // namespace tsba
