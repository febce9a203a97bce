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

#include "tsba/cli/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <typeinfo>

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
  auto* c = cmd->add_option("--config", a.config, "experiment config file");
  if (config_required) c->required();
  cmd->add_option("--seed", a.seed, "overrides the config seed");
  cmd->add_option("--out", a.out, "run directory (overrides the config 'out')");
}

// Command-line overrides are folded into the config text so the run record
// shows what was actually used.
tsba::ExperimentConfig resolve(const CommonArgs& a, const std::string& defense = {}) {
  tsba::FlatConfig c = tsba::FlatConfig::load(a.config);
  if (a.seed) c.set("seed", std::to_string(*a.seed));
  if (!a.out.empty()) c.set("out", std::filesystem::absolute(a.out).string());
  if (!defense.empty()) c.set("defense.kind", defense);
  return tsba::parse_experiment(c);
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const tsba::ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const tsba::ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const tsba::ShapeError*>(&e)) return "ShapeError";
  if (dynamic_cast<const tsba::EmptyDatasetError*>(&e)) return "EmptyDatasetError";
  if (dynamic_cast<const tsba::IoError*>(&e)) return "IoError";
  if (dynamic_cast<const tsba::CheckpointError*>(&e)) return "CheckpointError";
  if (dynamic_cast<const tsba::UnsupportedArchitecture*>(&e)) return "UnsupportedArchitecture";
  if (dynamic_cast<const tsba::NumericalDivergence*>(&e)) return "NumericalDivergence";
  if (dynamic_cast<const tsba::Error*>(&e)) return "Error";
  return "InternalError";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsba: time-series backdoor attack and defense lab"};
  app.require_subcommand(1);
  std::string verb;

  CommonArgs run_args, uni_args, def_args, eval_args, plot_args, rep_args;
  std::string defense_kind;
  std::vector<std::string> sample_ids;

  auto* run = app.add_subcommand("run", "train under the configured attack, evaluate, optionally defend");
  add_common(run, run_args);
  auto* uni = app.add_subcommand("universal-train", "train a universal trigger generator on several datasets");
  add_common(uni, uni_args);
  auto* def = app.add_subcommand("defend", "apply a defense to the backdoored model(s) of a run");
  add_common(def, def_args);
  def->add_option("--defense", defense_kind, "nc, fp or anp (overrides defense.kind)")
      ->check(CLI::IsMember({"nc", "fp", "anp"}));
  auto* ev = app.add_subcommand("eval", "re-score the saved models of a run");
  add_common(ev, eval_args);
  auto* plot = app.add_subcommand("plot", "waveform, spectrum and Grad-CAM figures for poisoned test samples");
  add_common(plot, plot_args);
  plot->add_option("--samples", sample_ids, "sample ids from the test split")->delimiter(',');
  auto* rep = app.add_subcommand("report", "summarise every run under a directory into summary.csv");
  add_common(rep, rep_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto r = tsba::cmd_run(resolve(run_args));
      std::cout << tsba::report_csv(r);
    } else if (*uni) {
      std::cout << tsba::cmd_universal_train(resolve(uni_args)).string() << "\n";
    } else if (*def) {
      for (const auto& r : tsba::cmd_defend(resolve(def_args, defense_kind))) std::cout << r.to_json().dump() << "\n";
    } else if (*ev) {
      std::cout << tsba::cmd_eval(resolve(eval_args))["folds"].dump(2) << "\n";
    } else if (*plot) {
      for (const auto& p : tsba::cmd_plot(resolve(plot_args), sample_ids)) std::cout << p.string() << "\n";
    } else if (*rep) {
      std::filesystem::path root = rep_args.out;
      if (root.empty() && !rep_args.config.empty()) root = resolve(rep_args).out;
      if (root.empty()) throw tsba::ConfigError("report needs --out or a config with 'out'");
      std::cout << tsba::cmd_report(root).string() << "\n";
    }
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", error_kind(e)}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
