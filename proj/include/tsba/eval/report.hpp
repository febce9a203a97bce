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

#include "tsba/data/io.hpp"
#include "tsba/eval/experiment.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tsba {

struct EvaluationReport {
  std::string dataset;
  std::string arch;
  std::string attack;
  std::string defense = "none";
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;

  struct Means {
    double clean_ca = std::numeric_limits<double>::quiet_NaN();
    double ca = 0, asr = 0, rms_all = 0, rms_top1 = 0;
    double defended_ca = std::numeric_limits<double>::quiet_NaN();
    double defended_asr = std::numeric_limits<double>::quiet_NaN();
  };

  // Arithmetic means over folds; a column missing in any fold stays NaN.
  Means means() const {
    Means m;
    if (folds.empty()) return m;
    const double n = static_cast<double>(folds.size());
    double clean = 0, dca = 0, dasr = 0;
    bool has_clean = true, has_def = true;
    for (const auto& f : folds) {
      m.ca += f.ca;
      m.asr += f.asr;
      m.rms_all += f.rms_all;
      m.rms_top1 += f.rms_top1;
      has_clean = has_clean && !std::isnan(f.clean_ca);
      clean += f.clean_ca;
      has_def = has_def && f.defense.has_value();
      if (f.defense) {
        dca += f.defense->ca_after;
        dasr += f.defense->asr_after;
      }
    }
    m.ca /= n;
    m.asr /= n;
    m.rms_all /= n;
    m.rms_top1 /= n;
    if (has_clean) m.clean_ca = clean / n;
    if (has_def) {
      m.defended_ca = dca / n;
      m.defended_asr = dasr / n;
    }
    return m;
  }
};

namespace detail {
inline std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }
}  // namespace detail

// Per-fold rows followed by a "mean" row. Numbers use the shortest exact
// decimal form, so equal results give byte-identical files.
inline void write_report_csv(std::ostream& os, const EvaluationReport& r) {
  os << "dataset,arch,attack,defense,seed,fold,clean_ca,ca,asr,rms_all,rms_top1,defended_ca,defended_asr\n";
  auto row = [&](const std::string& fold, double clean, double ca, double asr, double ra, double rt, double dca,
                 double dasr) {
    os << r.dataset << ',' << r.arch << ',' << r.attack << ',' << r.defense << ',' << r.seed << ',' << fold << ','
       << detail::cell(clean) << ',' << detail::cell(ca) << ',' << detail::cell(asr) << ',' << detail::cell(ra) << ','
       << detail::cell(rt) << ',' << detail::cell(dca) << ',' << detail::cell(dasr) << '\n';
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& f : r.folds)
    row(std::to_string(f.fold), f.clean_ca, f.ca, f.asr, f.rms_all, f.rms_top1, f.defense ? f.defense->ca_after : nan,
        f.defense ? f.defense->asr_after : nan);
  const auto m = r.means();
  row("mean", m.clean_ca, m.ca, m.asr, m.rms_all, m.rms_top1, m.defended_ca, m.defended_asr);
}

inline std::string report_csv(const EvaluationReport& r) {
  std::ostringstream os;
  write_report_csv(os, r);
  return os.str();
}

inline nlohmann::json report_json(const EvaluationReport& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json j{{"fold", f.fold}, {"clean_ca", num(f.clean_ca)}, {"ca", f.ca}, {"asr", f.asr},
                     {"rms_all", f.rms_all}, {"rms_top1", f.rms_top1}};
    if (f.defense) j["defense"] = f.defense->to_json();
    folds.push_back(j);
  }
  const auto m = r.means();
  return {{"dataset", r.dataset},
          {"arch", r.arch},
          {"attack", r.attack},
          {"defense", r.defense},
          {"seed", r.seed},
          {"fold_count", r.folds.size()},
          {"folds", folds},
          {"mean",
           {{"clean_ca", num(m.clean_ca)},
            {"ca", m.ca},
            {"asr", m.asr},
            {"rms_all", m.rms_all},
            {"rms_top1", m.rms_top1},
            {"defended_ca", num(m.defended_ca)},
            {"defended_asr", num(m.defended_asr)}}}};
}

inline EvaluationReport make_report(const Dataset& ds, const ExperimentSettings& s, std::uint64_t seed) {
  EvaluationReport r;
  r.dataset = ds.name;
  r.arch = to_string(s.arch);
  r.attack = to_string(s.attack);
  r.defense = to_string(s.defense.kind);
  r.seed = seed;
  return r;
}

// Stratified k-fold evaluation. The per-fold hook sees each finished run
// (e.g. to persist models) before it is discarded.
inline EvaluationReport crossval_run(const Dataset& ds, const ExperimentSettings& s, int k, std::uint64_t seed,
                                     const std::function<void(int, const AttackRun&)>& on_fold = {}) {
  FoldSplit split = stratified_kfold(ds, k, seed);
  EvaluationReport r = make_report(ds, s, seed);
  for (int fold = 0; fold < k; ++fold) {
    auto [tr, te] = split.indices(ds, fold);
    AttackRun run = run_attack(subset(ds, tr, ds.name), subset(ds, te, ds.name), s, seed * 1000 + static_cast<std::uint64_t>(fold));
    run.metrics.fold = fold;
    r.folds.push_back(run.metrics);
    if (on_fold) on_fold(fold, run);
  }
  return r;
}

// Single split with a given test set.
inline EvaluationReport holdout_run(const Dataset& train, const Dataset& test, const ExperimentSettings& s,
                                    std::uint64_t seed, AttackRun* keep = nullptr) {
  EvaluationReport r = make_report(train, s, seed);
  AttackRun run = run_attack(train, test, s, seed);
  r.folds.push_back(run.metrics);
  if (keep) *keep = std::move(run);
  return r;
}

}  // namespace tsba
