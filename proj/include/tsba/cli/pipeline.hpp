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

#include "tsba/attacks/universal.hpp"
#include "tsba/cli/experiment_config.hpp"
#include "tsba/cli/svg.hpp"
#include "tsba/eval/fourier.hpp"
#include "tsba/eval/gradcam.hpp"
#include "tsba/nn/checkpoint.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tsba {

namespace fs = std::filesystem;

// Per-fold working set, rebuilt identically by every verb that reads a run.
struct FoldData {
  int fold = 0;  // -1 for holdout
  Dataset train, test;
  std::uint64_t seed = 0;
  fs::path dir;
};

inline std::vector<FoldData> fold_data(const ExperimentConfig& e, const LoadedData& data, const fs::path& out) {
  std::vector<FoldData> folds;
  if (e.protocol == Protocol::holdout) {
    folds.push_back({-1, *data.train, *data.test, e.seed, out});
    return folds;
  }
  FoldSplit split = stratified_kfold(data.all, e.folds, e.seed);
  for (int k = 0; k < e.folds; ++k) {
    auto [tr, te] = split.indices(data.all, k);
    // same per-fold seed as crossval_run
    folds.push_back({k, subset(data.all, tr), subset(data.all, te), e.seed * 1000 + static_cast<std::uint64_t>(k),
                     out / ("fold_" + std::to_string(k))});
  }
  return folds;
}

inline std::shared_ptr<const Model> load_generator(const fs::path& path) {
  return std::make_shared<const Model>(load_checkpoint<Real>(path));
}

// The trigger a finished run used: fixed baselines are rebuilt from the
// attack settings, generator attacks from the saved generator.
inline Stamp run_stamp(const ExperimentConfig& e, std::uint64_t seed, const fs::path& dir) {
  AttackConfig cfg = e.settings.attack_cfg;
  cfg.seed = seed;
  if (!uses_generator(e.settings.attack)) return baseline_stamp(e.settings.attack, cfg);
  const fs::path g = dir / "generator.ckpt";
  if (!fs::exists(g)) throw IoError("missing artifact " + g.string() + " (run 'tsba run' first)");
  return generator_stamp(load_generator(g), cfg.clip_fraction);
}

inline Model load_required(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing artifact " + path.string() + " (run 'tsba run' first)");
  return load_checkpoint<Real>(path);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_run_artifacts(const fs::path& dir, const AttackRun& run, const ExperimentConfig& e,
                                std::uint64_t seed) {
  fs::create_directories(dir);
  const nlohmann::json meta = {{"attack", to_string(e.settings.attack)}, {"arch", to_string(e.settings.arch)}};
  if (run.clean) save_checkpoint(*run.clean, dir / "clean.ckpt", seed, meta);
  save_checkpoint(run.backdoored, dir / "backdoored.ckpt", seed, meta);
  if (run.generator) save_checkpoint(*run.generator, dir / "generator.ckpt", seed, meta);
  AttackConfig cfg = e.settings.attack_cfg;
  cfg.seed = seed;
  write_poison_manifest(dir / "poison_manifest.json", run.poisoned, cfg, to_string(e.settings.attack));
  if (run.metrics.defense && run.defended) {
    const std::string kind = to_string(run.metrics.defense->kind);
    save_checkpoint(*run.defended, dir / ("defended_" + kind + ".ckpt"), seed, meta);
    write_json(dir / ("defense_" + kind + ".json"), run.metrics.defense->to_json());
    if (!run.reversed_triggers.empty()) export_reversed_triggers(dir / "nc", run.reversed_triggers);
  }
}

inline std::ostream& log_stream() { return std::cerr; }

// --- run -------------------------------------------------------------------

inline EvaluationReport cmd_run(const ExperimentConfig& e) {
  if (e.out.empty()) throw ConfigError("an output directory is required (--out or 'out = ...')");
  LoadedData data = load_data(e);
  ExperimentSettings s = e.settings;
  if (!e.generator_checkpoint.empty()) s.generator = load_generator(e.generator_checkpoint);
  fs::create_directories(e.out);

  EvaluationReport report = make_report(data.all, s, e.seed);
  for (const FoldData& f : fold_data(e, data, e.out)) {
    log_stream() << "[run] " << to_string(s.attack) << " on " << data.all.name
                 << (f.fold >= 0 ? " fold " + std::to_string(f.fold) : std::string()) << " (" << f.train.size()
                 << " train / " << f.test.size() << " test)\n";
    AttackRun run = run_attack(f.train, f.test, s, f.seed);
    run.metrics.fold = std::max(f.fold, 0);
    write_run_artifacts(f.dir, run, e, f.seed);
    report.folds.push_back(run.metrics);
    log_stream() << "[run]   CA " << run.metrics.ca << "  ASR " << run.metrics.asr << "  rms " << run.metrics.rms_all
                 << "\n";
  }
  write_text(e.out / "report.csv", report_csv(report));
  write_json(e.out / "report.json", report_json(report));
  write_json(e.out / "run.json", run_record(e, data.all, "run"));
  return report;
}

// --- universal-train -----------------------------------------------------------

inline fs::path cmd_universal_train(const ExperimentConfig& e) {
  if (e.out.empty()) throw ConfigError("an output directory is required (--out or 'out = ...')");
  if (e.universal_datasets.size() < 2) throw ConfigError("universal.datasets must list at least 2 dataset configs");
  std::vector<Dataset> sets;
  for (const auto& p : e.universal_datasets) sets.push_back(load_dataset(load_dataset_config(p)));
  const Index D = sets.front().variables;
  for (const auto& d : sets)
    if (d.variables != D)
      throw ConfigError("universal datasets disagree on the variable count (" + std::to_string(D) + " vs " +
                        std::to_string(d.variables) + ")");

  Model g = build_universal_generator<Real>(D, detail::derive_seed(e.seed, "universal"), e.universal_width);
  UniversalConfig cfg;
  cfg.iterations = e.universal_iterations;
  cfg.arch = e.settings.arch;
  cfg.width = e.settings.width;
  cfg.attack = e.settings.attack_cfg;
  cfg.attack.seed = e.seed;
  UniversalHooks hooks;
  hooks.progress = [&](const UniversalIteration& it) {
    if ((it.iteration + 1) % 25 == 0 || it.iteration + 1 == cfg.iterations)
      log_stream() << "[universal-train] iteration " << it.iteration + 1 << "/" << cfg.iterations << "  g-loss "
                   << it.generator_loss << "\n";
  };
  train_universal(g, std::span<const Dataset>(sets), cfg, hooks);

  fs::create_directories(e.out);
  const fs::path ckpt = e.out / "universal.ckpt";
  nlohmann::json names = nlohmann::json::array();
  for (const auto& d : sets) names.push_back(d.name);
  save_checkpoint(g, ckpt, e.seed, {{"datasets", names}, {"iterations", cfg.iterations}});
  nlohmann::json rec = run_record(e, sets.front(), "universal-train");
  rec["datasets"] = nlohmann::json::array();
  for (const auto& d : sets) rec["datasets"].push_back({{"name", d.name}, {"content_hash", dataset_hash(d)}});
  write_json(e.out / "universal.json", rec);
  return ckpt;
}

// --- defend ----------------------------------------------------------------------

// Applies the configured defense to each fold's saved backdoored model. The
// defender share is carved as in 'run'; when the run itself had no defense
// that share overlapped its training data, which the record notes.
inline std::vector<DefenseReport> cmd_defend(const ExperimentConfig& e) {
  if (e.settings.defense.kind == DefenseKind::none) throw ConfigError("defense.kind is none; nothing to do");
  if (e.out.empty()) throw ConfigError("an output directory is required (--out or 'out = ...')");
  LoadedData data = load_data(e);
  const std::string kind = to_string(e.settings.defense.kind);
  std::vector<DefenseReport> reports;
  for (const FoldData& f : fold_data(e, data, e.out)) {
    Model backdoored = load_required(f.dir / "backdoored.ckpt");
    Stamp stamp = run_stamp(e, f.seed, f.dir);
    auto [rest, defender] = defender_split(f.train, e.settings.defense, f.seed);
    std::vector<ReversedTrigger> triggers;
    log_stream() << "[defend] " << kind << (f.fold >= 0 ? " fold " + std::to_string(f.fold) : std::string()) << "\n";
    DefenseOutcome<Real> out = apply_defense(backdoored, defender, e.settings.defense, f.seed, &triggers);
    DefenseReport r = assess_defense(backdoored, out, f.test, stamp, e.settings.attack_cfg.target_class);
    save_checkpoint(out.model, f.dir / ("defended_" + kind + ".ckpt"), f.seed);
    nlohmann::json j = r.to_json();
    j["record"] = run_record(e, data.all, "defend");
    write_json(f.dir / ("defense_" + kind + ".json"), j);
    if (!triggers.empty()) export_reversed_triggers(f.dir / "nc", triggers);
    log_stream() << "[defend]   ASR " << r.asr_before << " -> " << r.asr_after << "  CA " << r.ca_before << " -> "
                 << r.ca_after << "\n";
    reports.push_back(std::move(r));
  }
  return reports;
}

// --- eval ------------------------------------------------------------------------

// Re-scores every saved classifier of a run on its test split.
inline nlohmann::json cmd_eval(const ExperimentConfig& e) {
  if (e.out.empty()) throw ConfigError("an output directory is required (--out or 'out = ...')");
  LoadedData data = load_data(e);
  const int target = e.settings.attack_cfg.target_class;
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldData& f : fold_data(e, data, e.out)) {
    Model backdoored = load_required(f.dir / "backdoored.ckpt");
    Stamp stamp = run_stamp(e, f.seed, f.dir);
    nlohmann::json models = nlohmann::json::object();
    std::vector<std::pair<std::string, fs::path>> names = {{"backdoored", f.dir / "backdoored.ckpt"}};
    if (fs::exists(f.dir / "clean.ckpt")) names.emplace_back("clean", f.dir / "clean.ckpt");
    for (const char* k : {"nc", "fp", "anp"}) {
      fs::path p = f.dir / ("defended_" + std::string(k) + ".ckpt");
      if (fs::exists(p)) names.emplace_back("defended_" + std::string(k), p);
    }
    for (const auto& [name, path] : names) {
      Model m = load_checkpoint<Real>(path);
      models[name] = {{"ca", clean_accuracy(m, f.test)}, {"asr", attack_success_rate(m, stamp, f.test, target)}};
    }
    std::vector<const TimeSeriesSample*> victims;
    for (const auto& x : f.test.samples)
      if (x.label != target) victims.push_back(&x);
    auto stamped = stamp(std::span<const TimeSeriesSample* const>(victims));
    RmsStealth rms = rms_stealth(std::span<const TimeSeriesSample* const>(victims), std::span<const MatrixD>(stamped));
    folds.push_back({{"fold", std::max(f.fold, 0)},
                     {"models", models},
                     {"rms_all", rms.rms_all},
                     {"rms_top1", rms.rms_top1},
                     {"excluded_variables", rms.excluded_variables}});
  }
  nlohmann::json j = {{"folds", folds}, {"record", run_record(e, data.all, "eval")}};
  write_json(e.out / "eval.json", j);
  return j;
}

// --- plot ------------------------------------------------------------------------

// Three figures per sample: waveform overlay, magnitude spectra and a
// Grad-CAM strip of the backdoored model on the poisoned input. Samples are
// picked from the (first) test split by id; by default the first two
// samples outside the target class.
inline std::vector<fs::path> cmd_plot(const ExperimentConfig& e, std::vector<std::string> ids = {}) {
  if (e.out.empty()) throw ConfigError("an output directory is required (--out or 'out = ...')");
  LoadedData data = load_data(e);
  const FoldData f = fold_data(e, data, e.out).front();
  Model backdoored = load_required(f.dir / "backdoored.ckpt");
  Stamp stamp = run_stamp(e, f.seed, f.dir);
  const int target = e.settings.attack_cfg.target_class;
  std::vector<const TimeSeriesSample*> picks;
  if (ids.empty()) {
    for (const auto& x : f.test.samples)
      if (x.label != target && picks.size() < 2) picks.push_back(&x);
  } else {
    for (const auto& id : ids) {
      auto it = std::find_if(f.test.samples.begin(), f.test.samples.end(),
                             [&](const TimeSeriesSample& x) { return x.sample_id == id; });
      if (it == f.test.samples.end()) throw ConfigError("sample '" + id + "' is not in the test split");
      picks.push_back(&*it);
    }
  }
  if (picks.empty()) throw EmptyDatasetError("no samples to plot");
  auto poisoned = stamp(std::span<const TimeSeriesSample* const>(picks));

  const fs::path dir = f.dir / "plots";
  std::vector<fs::path> written;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const TimeSeriesSample& x = *picks[i];
    const MatrixD& p = poisoned[i];
    if (uses_generator(e.settings.attack) && budget_excess(p, x, e.settings.attack_cfg.clip_fraction) > 1e-9)
      throw Error("poisoned sample '" + x.sample_id + "' exceeds the clip budget");
    const std::string stem = sanitize_id(x.sample_id);
    auto col = [](const MatrixD& m, Index d, Index n) {
      return std::vector<double>(m.col(d).data(), m.col(d).data() + n);
    };
    std::vector<PlotSeries> wave, spec;
    const MatrixD fx = fourier_magnitude(x.valid()), fp = fourier_magnitude(p.topRows(x.valid_length));
    for (Index d = 0; d < x.variables(); ++d) {
      const std::string v = x.variables() > 1 ? " v" + std::to_string(d) : "";
      const std::string c0 = colors[(2 * d) % 6], c1 = colors[(2 * d + 1) % 6];
      wave.push_back({"clean" + v, col(x.values, d, x.valid_length), c0});
      wave.push_back({"poisoned" + v, col(p, d, x.valid_length), c1});
      spec.push_back({"clean" + v, col(fx, d, fx.rows()), c0});
      spec.push_back({"poisoned" + v, col(fp, d, fp.rows()), c1});
    }
    written.push_back(dir / (stem + "_waveform.svg"));
    write_text(written.back(), svg_line_plot(x.sample_id + " waveform", wave));
    written.push_back(dir / (stem + "_spectrum.svg"));
    write_text(written.back(), svg_line_plot(x.sample_id + " magnitude spectrum", spec));

    std::vector<PlotSeries> cam_series = {{"poisoned", col(p, 0, x.valid_length), "#d62728"}};
    std::string title = x.sample_id + " Grad-CAM";
    std::vector<double> strip;
    try {
      const VectorD logits = backdoored.forward(to_activations<Real>(p)).data.col(0).cast<double>();
      Index pred;
      logits.maxCoeff(&pred);
      const VectorD cam = grad_cam_1d(backdoored, p, static_cast<int>(pred));
      strip.assign(cam.data(), cam.data() + std::min<Index>(cam.size(), x.valid_length));
      title += " (class " + std::to_string(pred) + ")";
    } catch (const UnsupportedArchitecture&) {
      title += " unavailable for this architecture";
    }
    written.push_back(dir / (stem + "_gradcam.svg"));
    write_text(written.back(), svg_line_plot(title, cam_series, strip));
  }
  nlohmann::json rec = run_record(e, data.all, "plot");
  rec["files"] = nlohmann::json::array();
  for (const auto& w : written) rec["files"].push_back(fs::relative(w, dir).string());
  write_json(dir / "plots.json", rec);
  return written;
}

// --- report ----------------------------------------------------------------------

// Collects the mean row of every report.json under root into summary.csv.
inline fs::path cmd_report(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("no such directory " + root.string());
  std::vector<fs::path> found;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "report.json") found.push_back(entry.path());
  if (found.empty()) throw IoError("no report.json under " + root.string());
  std::sort(found.begin(), found.end());
  std::ostringstream os;
  os << "run,dataset,arch,attack,defense,seed,folds,clean_ca,ca,asr,rms_all,rms_top1,defended_ca,defended_asr\n";
  for (const auto& p : found) {
    std::ifstream in(p);
    nlohmann::json j = nlohmann::json::parse(in);
    const auto& m = j.at("mean");
    auto cell = [&](const char* k) {
      return m.contains(k) && m[k].is_number() ? detail::format_double(m[k].get<double>()) : std::string();
    };
    std::string run = fs::relative(p.parent_path(), root).string();
    if (run.empty()) run = ".";
    os << run << ',' << j.value("dataset", "") << ',' << j.value("arch", "") << ',' << j.value("attack", "") << ','
       << j.value("defense", "") << ',' << j.value("seed", 0ULL) << ',' << j.at("folds").size() << ','
       << cell("clean_ca") << ',' << cell("ca") << ',' << cell("asr") << ',' << cell("rms_all") << ','
       << cell("rms_top1") << ',' << cell("defended_ca") << ',' << cell("defended_asr") << '\n';
  }
  const fs::path out = root / "summary.csv";
  write_text(out, os.str());
  return out;
}

}  // namespace tsba
