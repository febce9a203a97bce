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
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace tsba {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

FlatConfig parse_text(const std::string& text, std::filesystem::path base = {}) {
  std::istringstream in(text);
  return FlatConfig::parse(in, std::move(base));
}

// Smallest config that exercises every stage in well under a second.
std::string tiny_config(const std::string& attack, const std::string& extra = "") {
  return "dataset.kind = synthetic\n"
         "dataset.synthetic.per_class = 12\n"
         "dataset.synthetic.length = 32\n"
         "classifier.epochs = 2\n"
         "classifier.width = 0.125\n"
         "classifier.patience = 0\n"
         "attack.kind = " + attack + "\n"
         "attack.clean_epochs = 1\n"
         "attack.backdoor_epochs = 2\n"
         "attack.generator_width = 0.125\n"
         "seed = 5\n" + extra;
}

ExperimentConfig tiny(const TempDir& dir, const std::string& attack, const std::string& extra = "") {
  auto c = parse_text(tiny_config(attack, extra), dir.path());
  c.set("out", (dir / "run").string());
  return parse_experiment(c);
}

TEST(FlatConfig, ParsesCommentsDottedKeysAndLists) {
  auto c = parse_text("# header\n  a.b = 3   # trailing\n\nname = x y\nitems = p, q ,r\n");
  EXPECT_EQ(c.integer("a.b", 0), 3);
  EXPECT_EQ(c.str("name", ""), "x y");
  EXPECT_EQ(c.list("items"), (std::vector<std::string>{"p", "q", "r"}));
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(FlatConfig, RejectsMalformedLinesAndDuplicates) {
  EXPECT_THROW(parse_text("novalue\n"), ParseError);
  EXPECT_THROW(parse_text("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse_text("= 1\n"), ParseError);
}

TEST(FlatConfig, TypedReadsValidate) {
  auto c = parse_text("n = abc\nf = 1.5\nb = maybe\n");
  EXPECT_THROW(c.num("n", 0), ConfigError);
  EXPECT_THROW(c.integer("f", 0), ConfigError);
  EXPECT_THROW(c.flag("b", false), ConfigError);
  EXPECT_EQ(c.num("missing", 2.5), 2.5);
}

TEST(FlatConfig, PathsResolveAgainstConfigDirectory) {
  auto c = parse_text("p = data/x.json\nq = /abs\n", "/base");
  EXPECT_EQ(c.path("p"), std::filesystem::path("/base/data/x.json"));
  EXPECT_EQ(c.path("q"), std::filesystem::path("/abs"));
}

TEST(ExperimentConfig, DefaultsFollowTheStandardProtocol) {
  auto e = parse_experiment(parse_text(""));
  EXPECT_EQ(e.settings.attack, AttackKind::tsba_a);
  EXPECT_EQ(e.settings.attack_cfg.target_class, 0);
  EXPECT_DOUBLE_EQ(e.settings.attack_cfg.poison_rate, 0.10);
  EXPECT_DOUBLE_EQ(e.settings.attack_cfg.clip_fraction, 0.10);
  EXPECT_EQ(e.settings.attack_cfg.clean_epochs, 20);
  EXPECT_EQ(e.settings.attack_cfg.backdoor_epochs, 500);
  EXPECT_EQ(e.settings.attack_cfg.classifier.epochs, 500);
  EXPECT_EQ(e.settings.attack_cfg.classifier.early_stop.patience, 50);
  EXPECT_EQ(e.folds, 10);
}

TEST(ExperimentConfig, FailsFastOnBadValues) {
  EXPECT_THROW(parse_experiment(parse_text("attack.kind = badnets\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("defense.kind = strip\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("classifier.arch = vgg\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("typo.key = 1\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("attack.poison_rate = 0\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("protocol = kfold\nfolds = 1\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("defense.fp.prune_rate = 1\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("attack.kind = universal\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("attack.generator = /nonexistent/g.ckpt\n")), ConfigError);
  EXPECT_THROW(parse_experiment(parse_text("dataset.kind = ucr\ndataset.name = X\ndataset.path = /nonexistent\n")),
               ConfigError);
}

TEST(ExperimentConfig, TargetClassCheckedAgainstDataBeforeTraining) {
  TempDir dir;
  auto e = tiny(dir, "tsba_a", "attack.target_class = 7\n");
  EXPECT_THROW(cmd_run(e), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(dir / "run" / "backdoored.ckpt"));
}

TEST(ExperimentConfig, UcrTrainAndTestShareLabels) {
  TempDir dir;
  write_file(dir / "Toy_TRAIN.tsv", "2\t0\t1\t2\n1\t3\t4\t5\n");
  write_file(dir / "Toy_TEST.tsv", "1\t0\t0\t1\n");
  auto e = parse_experiment(parse_text("dataset.kind = ucr\ndataset.name = Toy\ndataset.path = .\n", dir.path()));
  LoadedData d = load_data(e);
  ASSERT_TRUE(d.train && d.test);
  EXPECT_EQ(d.train->size(), 2u);
  EXPECT_EQ(d.test->size(), 1u);
  EXPECT_EQ(d.test->samples[0].label, d.train->samples[1].label);
  EXPECT_NE(d.test->samples[0].sample_id, d.train->samples[0].sample_id);
}

TEST(CmdRun, WritesTheArtifactContract) {
  TempDir dir;
  auto e = tiny(dir, "tsba_a");
  cmd_run(e);
  for (const char* f : {"clean.ckpt", "backdoored.ckpt", "generator.ckpt", "report.csv", "report.json",
                        "poison_manifest.json", "run.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / f)) << f;
  auto rec = nlohmann::json::parse(read_file(dir / "run" / "run.json"));
  EXPECT_EQ(rec["seed"], 5);
  EXPECT_EQ(rec["config"]["attack.kind"], "tsba_a");
  EXPECT_EQ(rec["config"]["attack.poison_rate"], 0.1);
  EXPECT_EQ(rec["dataset"]["content_hash"].get<std::string>().size(), 16u);
  auto manifest = nlohmann::json::parse(read_file(dir / "run" / "poison_manifest.json"));
  EXPECT_EQ(manifest["poisoned"].size(), poison_count(0.1, 12));
}

TEST(CmdRun, SameConfigAndSeedGiveIdenticalReports) {
  TempDir a, b;
  cmd_run(tiny(a, "static_noise"));
  cmd_run(tiny(b, "static_noise"));
  EXPECT_EQ(read_file(a / "run" / "report.csv"), read_file(b / "run" / "report.csv"));
  EXPECT_EQ(read_file(a / "run" / "backdoored.ckpt"), read_file(b / "run" / "backdoored.ckpt"));
}

TEST(CmdRun, KFoldWritesOneDirectoryPerFold) {
  TempDir dir;
  auto e = tiny(dir, "vanilla_fixed", "protocol = kfold\nfolds = 2\nclean_baseline = false\n");
  auto r = cmd_run(e);
  EXPECT_EQ(r.folds.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "fold_0" / "backdoored.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "fold_1" / "backdoored.ckpt"));
  EXPECT_FALSE(std::filesystem::exists(dir / "run" / "fold_0" / "clean.ckpt"));
}

TEST(CmdRun, TsbaBReusesAGeneratorCheckpoint) {
  TempDir dir;
  cmd_run(tiny(dir, "tsba_a"));
  const auto g = dir / "run" / "generator.ckpt";
  const std::string before = read_file(g);
  TempDir dir2;
  auto e = tiny(dir2, "tsba_b", "attack.generator = " + g.string() + "\n");
  cmd_run(e);
  EXPECT_EQ(load_checkpoint<Real>(dir2 / "run" / "generator.ckpt").parameters(), load_checkpoint<Real>(g).parameters());
  EXPECT_EQ(read_file(g), before);
}

TEST(CmdUniversalTrain, ZeroIterationsSavesTheInitialisation) {
  TempDir dir;
  write_file(dir / "f0.cfg", "dataset.synthetic.per_class = 6\ndataset.synthetic.length = 32\n");
  write_file(dir / "f1.cfg", "dataset.synthetic.per_class = 6\ndataset.synthetic.length = 32\ndataset.synthetic.family = 1\n");
  auto c = parse_text("universal.datasets = f0.cfg, f1.cfg\nuniversal.iterations = 0\nseed = 2\n", dir.path());
  c.set("out", (dir / "u").string());
  auto e = parse_experiment(c);
  auto path = cmd_universal_train(e);
  Model g = load_checkpoint<Real>(path);
  Model init = build_universal_generator<Real>(1, detail::derive_seed(2, "universal"), e.universal_width);
  EXPECT_EQ(g.parameters(), init.parameters());
}

TEST(CmdUniversalTrain, NeedsTwoDatasetsWithCommonVariables) {
  TempDir dir;
  write_file(dir / "f0.cfg", "dataset.synthetic.per_class = 6\n");
  write_file(dir / "f1.cfg", "dataset.synthetic.per_class = 6\ndataset.synthetic.variables = 2\n");
  auto one = parse_text("universal.datasets = f0.cfg\nout = u\n", dir.path());
  EXPECT_THROW(cmd_universal_train(parse_experiment(one)), ConfigError);
  auto mixed = parse_text("universal.datasets = f0.cfg, f1.cfg\nout = u\n", dir.path());
  EXPECT_THROW(cmd_universal_train(parse_experiment(mixed)), ConfigError);
}

TEST(CmdUniversal, GeneratorPoisonsAnUnseenFamily) {
  TempDir dir;
  write_file(dir / "f0.cfg", "dataset.synthetic.per_class = 6\ndataset.synthetic.length = 32\n");
  write_file(dir / "f1.cfg", "dataset.synthetic.per_class = 6\ndataset.synthetic.length = 32\ndataset.synthetic.family = 1\n");
  auto c = parse_text(tiny_config("tsba_a", "universal.datasets = f0.cfg, f1.cfg\nuniversal.iterations = 2\n"), dir.path());
  c.set("out", (dir / "u").string());
  auto ckpt = cmd_universal_train(parse_experiment(c));
  auto e = tiny(dir, "universal", "dataset.synthetic.family = 4\nattack.generator = " + ckpt.string() + "\n");
  auto r = cmd_run(e);
  EXPECT_EQ(r.attack, "universal");
  EXPECT_LE(r.folds[0].rms_top1, 0.1 + 1e-9);
}

TEST(CmdDefend, LeavesTheBackdooredCheckpointUntouched) {
  TempDir dir;
  auto e = tiny(dir, "vanilla_fixed", "defense.kind = fp\ndefense.fp.finetune_epochs = 1\n");
  cmd_run(tiny(dir, "vanilla_fixed"));
  const std::string before = read_file(dir / "run" / "backdoored.ckpt");
  auto reports = cmd_defend(e);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(read_file(dir / "run" / "backdoored.ckpt"), before);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "defended_fp.ckpt"));
  auto j = nlohmann::json::parse(read_file(dir / "run" / "defense_fp.json"));
  EXPECT_EQ(j["defense"], "fp");
  EXPECT_TRUE(j["artifacts"].contains("pruned_channels"));
}

TEST(CmdDefend, MissingRunIsDescriptive) {
  TempDir dir;
  auto e = tiny(dir, "vanilla_fixed", "defense.kind = nc\n");
  try {
    cmd_defend(e);
    FAIL() << "expected IoError";
  } catch (const IoError& err) {
    EXPECT_NE(std::string(err.what()).find("backdoored.ckpt"), std::string::npos);
  }
}

TEST(CmdEval, RescoresMatchTheRunReport) {
  TempDir dir;
  auto e = tiny(dir, "tsba_a");
  auto r = cmd_run(e);
  auto j = cmd_eval(e);
  EXPECT_DOUBLE_EQ(j["folds"][0]["models"]["backdoored"]["ca"].get<double>(), r.folds[0].ca);
  EXPECT_DOUBLE_EQ(j["folds"][0]["models"]["backdoored"]["asr"].get<double>(), r.folds[0].asr);
  EXPECT_DOUBLE_EQ(j["folds"][0]["models"]["clean"]["ca"].get<double>(), r.folds[0].clean_ca);
  EXPECT_DOUBLE_EQ(j["folds"][0]["rms_all"].get<double>(), r.folds[0].rms_all);
}

TEST(CmdPlot, ThreeFilesPerSampleNamedBySampleId) {
  TempDir dir;
  auto e = tiny(dir, "tsba_a");
  cmd_run(e);
  LoadedData data = load_data(e);
  std::string id;
  for (const auto& x : data.test->samples)
    if (x.label != 0) id = x.sample_id;
  auto files = cmd_plot(e, {id});
  ASSERT_EQ(files.size(), 3u);
  const std::string stem = sanitize_id(id);
  EXPECT_EQ(files[0].filename(), stem + "_waveform.svg");
  EXPECT_EQ(files[1].filename(), stem + "_spectrum.svg");
  EXPECT_EQ(files[2].filename(), stem + "_gradcam.svg");
  for (const auto& f : files) EXPECT_EQ(read_file(f).rfind("<svg", 0), 0u);
  EXPECT_THROW(cmd_plot(e, {"no-such-sample"}), ConfigError);
}

TEST(CmdPlot, PlottedPoisonStaysWithinBudget) {
  TempDir dir;
  auto e = tiny(dir, "tsba_a");
  cmd_run(e);
  LoadedData data = load_data(e);
  Stamp stamp = run_stamp(e, e.seed, dir / "run");
  std::vector<const TimeSeriesSample*> xs;
  for (const auto& x : data.test->samples) xs.push_back(&x);
  auto p = stamp(std::span<const TimeSeriesSample* const>(xs));
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_LE(budget_excess(p[i], *xs[i], 0.1), 1e-9);
}

TEST(CmdReport, SummarisesEveryRun) {
  TempDir dir;
  auto a = parse_text(tiny_config("vanilla_fixed"), dir.path());
  a.set("out", (dir / "runs" / "a").string());
  cmd_run(parse_experiment(a));
  auto b = parse_text(tiny_config("static_noise"), dir.path());
  b.set("out", (dir / "runs" / "b").string());
  cmd_run(parse_experiment(b));
  auto path = cmd_report(dir / "runs");
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[1].substr(0, 2), "a,");
  EXPECT_NE(lines[2].find("static_noise"), std::string::npos);
  EXPECT_THROW(cmd_report(dir / "nothing"), IoError);
}

TEST(Svg, SanitizedIdsAreFileSafeAndStable) {
  EXPECT_EQ(sanitize_id("synthetic_f0#c1_3"), "synthetic_f0_c1_3");
  EXPECT_EQ(sanitize_id("a/b c"), "a_b_c");
}

// The shipped configs must stay loadable; external inputs (UCR files, a
// trained universal generator) are stood in for.
TEST(SampleConfigs, AllParse) {
  TempDir dir;
  write_file(dir / "BirdChicken_TRAIN.tsv", "1\t0.1\t0.2\n2\t0.3\t0.1\n");
  write_file(dir / "BirdChicken_TEST.tsv", "1\t0.2\t0.2\n2\t0.1\t0.3\n");
  save_checkpoint(build_universal_generator(1, 0, 0.125), dir / "universal.ckpt");
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(TSBA_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    ++seen;
    auto c = FlatConfig::load(entry.path());
    if (c.has("dataset.path")) c.set("dataset.path", dir.path().string());
    if (c.has("attack.generator")) c.set("attack.generator", (dir / "universal.ckpt").string());
    EXPECT_NO_THROW(parse_experiment(c)) << entry.path();
  }
  EXPECT_GE(seen, 6);
}

}  // namespace
}  // namespace tsba
