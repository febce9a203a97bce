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

#include "gradcheck.hpp"
#include "test_util.hpp"

#include "tsba/data/synthetic.hpp"
#include "tsba/nn/checkpoint.hpp"
#include "tsba/nn/train.hpp"
#include "tsba/nn/zoo.hpp"

#include <gtest/gtest.h>

namespace tsba {
namespace {

Activations<double> random_batch(Index batch, Index length, Index vars, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0, 1);
  Activations<double> x{Mat<double>(vars, batch * length), batch, length};
  for (Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = n(rng);
  return x;
}

struct ArchCase {
  ClassifierArch arch;
  double width;
};

void PrintTo(const ArchCase& c, std::ostream* os) { *os << to_string(c.arch) << " x" << c.width; }

class GradientCheck : public ::testing::TestWithParam<ArchCase> {};

// Small instances of each classifier family (roughly 1e3 parameters).
TEST_P(GradientCheck, AnalyticMatchesCentralDifferences) {
  const auto [arch, width] = GetParam();
  auto net = build_classifier<double>(arch, 16, 2, 3, 5, width);
  EXPECT_GT(net.parameter_count(), 300u);
  EXPECT_LT(net.parameter_count(), 5000u);
  auto x = random_batch(3, 16, 2, 17);
  auto r = testing::check_classifier_gradient(net, x, {0, 2, 1}, 100, 99);
  EXPECT_LE(r.max_relative_error, 1e-4) << to_string(arch) << " params=" << net.parameter_count();
  EXPECT_LE(testing::check_input_gradient(net, x, {0, 2, 1}, 40, 3), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Families, GradientCheck,
                         ::testing::Values(ArchCase{ClassifierArch::fcn, 1.0 / 32}, ArchCase{ClassifierArch::resnet, 1.0 / 16},
                                           ArchCase{ClassifierArch::tcn, 1.0 / 8}, ArchCase{ClassifierArch::lstm, 1.0 / 16}),
                         [](const auto& info) { return to_string(info.param.arch); });

TEST(GradientCheckGenerators, TriggerAndUniversal) {
  for (bool universal : {false, true}) {
    auto g = universal ? build_universal_generator<double>(1, 3, 1.0 / 32) : build_trigger_generator<double>(24, 1, 3, 1.0 / 16);
    auto x = random_batch(2, 24, 1, 4);
    Mat<double> w = Mat<double>::Random(1, 48);
    auto r = testing::check_sequence_gradient(g, x, w, 100, 8);
    EXPECT_LE(r.max_relative_error, 1e-4) << (universal ? "universal" : "trigger");
  }
}

TEST(TriggerGenerator, ShapeAndRange) {
  auto g = build_trigger_generator(140, 1, 1);
  EXPECT_EQ(g.spec().layers.size(), 4u);
  auto x = random_batch(1, 140, 1, 2);
  auto y = g.forward(Activations<Real>{x.data.cast<Real>(), 1, 140});
  EXPECT_EQ(y.data.rows(), 1);
  EXPECT_EQ(y.data.cols(), 140);
  EXPECT_LE(y.data.cwiseAbs().maxCoeff(), 1.0f);
}

TEST(TriggerGenerator, ZeroFinalLayerGivesZeroOutput) {
  auto g = build_trigger_generator(64, 2, 1, 0.25);
  zero_final_layer(g);
  auto x = random_batch(2, 64, 2, 3);
  EXPECT_TRUE(g.forward(Activations<Real>{x.data.cast<Real>(), 2, 64}).data.isZero());
}

TEST(TriggerGenerator, LengthPreservingSweep) {
  auto g = build_trigger_generator(32, 1, 1, 0.125);
  for (Index L : {32, 97, 512}) {
    auto x = random_batch(1, L, 1, static_cast<std::uint64_t>(L));
    auto y = g.forward(Activations<Real>{x.data.cast<Real>(), 1, L});
    EXPECT_EQ(y.length, L);
    EXPECT_EQ(y.data.cols(), L);
  }
}

TEST(UniversalGenerator, LengthAgnosticAndLarger) {
  auto u = build_universal_generator(1, 1, 0.125);
  for (Index L : {96, 512}) {
    auto x = random_batch(1, L, 1, 5);
    auto y = u.forward(Activations<Real>{x.data.cast<Real>(), 1, L});
    EXPECT_EQ(y.data.cols(), L);
    EXPECT_LE(y.data.cwiseAbs().maxCoeff(), 1.0f);
  }
  auto zero = u.forward(Activations<Real>{Mat<Real>::Zero(1, 50), 1, 50});
  EXPECT_LE(zero.data.cwiseAbs().maxCoeff(), 1.0f);
  for (Index D : {1, 2, 3}) {
    EXPECT_GT(Network<Real>(universal_generator_spec(D)).parameter_count(),
              Network<Real>(trigger_generator_spec(128, D)).parameter_count());
  }
}

TEST(Classifier, SoftmaxNormalisedForEveryArch) {
  for (auto arch : {ClassifierArch::fcn, ClassifierArch::tcn, ClassifierArch::resnet, ClassifierArch::lstm}) {
    auto f = build_classifier(arch, 128, 1, 2, 3, 0.25);
    auto x = random_batch(1, 128, 1, 6);
    Prediction p = predict(f, MatrixD(x.data.transpose()));
    EXPECT_NEAR(p.probabilities.sum(), 1.0, 1e-6);
    Index arg;
    p.probabilities.maxCoeff(&arg);
    EXPECT_EQ(p.label, arg);
    EXPECT_EQ(predict(f, MatrixD(x.data.transpose())).probabilities, p.probabilities);
  }
  EXPECT_THROW(parse_arch("transformer"), ConfigError);
  EXPECT_THROW(classifier_spec(ClassifierArch::fcn, 128, 1, 1), ConfigError);
}

TEST(Classifier, PredictRejectsShapeMismatch) {
  auto f = build_classifier(ClassifierArch::fcn, 32, 2, 2, 0, 0.125);
  EXPECT_THROW(predict(f, MatrixD::Zero(32, 1)), ShapeError);
  EXPECT_THROW(predict(f, MatrixD::Zero(31, 2)), ShapeError);
}

TEST(Classifier, UntrainedAccuracyNearChance) {
  SyntheticSpec spec;
  spec.per_class = 50;
  spec.length = 64;
  Dataset ds = make_synthetic(spec);
  auto data = labeled(ds);
  double mean = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto f = build_classifier(ClassifierArch::fcn, 64, 1, 2, seed, 0.125);
    mean += accuracy(f, data) / 100.0;
  }
  mean /= 20;
  EXPECT_NEAR(mean, 0.5, 0.1);
}

TEST(Classifier, ParameterCountIsPureFunctionOfSpec) {
  auto spec = classifier_spec(ClassifierArch::resnet, 64, 3, 4, 0.25);
  EXPECT_EQ(Network<Real>(spec, 1).parameter_count(), Network<Real>(spec, 2).parameter_count());
}

TEST(Training, ZeroLearningRateLeavesParameters) {
  SyntheticSpec spec;
  spec.per_class = 8;
  spec.length = 32;
  Dataset ds = make_synthetic(spec);
  auto f = build_classifier(ClassifierArch::fcn, 32, 1, 2, 1, 0.125);
  auto before = f.parameters();
  Adam<Real> opt(0.0);
  Rng rng(1);
  auto data = labeled(ds);
  double loss = train_epoch_ce(f, opt, std::span<const LabeledSeries>(data), 4, rng);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_EQ(f.parameters(), before);
}

TEST(Training, MemorisesSingleSample) {
  SyntheticSpec spec;
  spec.per_class = 1;
  spec.length = 32;
  Dataset ds = make_synthetic(spec);
  auto f = build_classifier<double>(ClassifierArch::fcn, 32, 1, 2, 4, 0.125);
  std::vector<LabeledSeries> one{{&ds.samples[1].values, 1}};
  Sgd<double> opt(0.05);
  double prev = std::numeric_limits<double>::infinity();
  double loss = 0;
  for (int step = 0; step < 200; ++step) {
    loss = train_epoch_ce(f, opt, std::span<const LabeledSeries>(one), std::vector<std::vector<std::size_t>>{{0}});
    EXPECT_LE(loss, prev + 1e-12) << "step " << step;
    prev = loss;
  }
  EXPECT_LT(loss, 0.01);
}

TEST(Training, DivergenceReportsDiagnostics) {
  SyntheticSpec spec;
  spec.per_class = 4;
  spec.length = 16;
  Dataset ds = make_synthetic(spec);
  ds.samples[0].values(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto f = build_classifier(ClassifierArch::fcn, 16, 1, 2, 1, 0.125);
  Adam<Real> opt(1e-3);
  auto data = labeled(ds);
  try {
    train_epoch_ce(f, opt, std::span<const LabeledSeries>(data), std::vector<std::vector<std::size_t>>{{1, 2}, {0, 3}});
    FAIL() << "expected divergence";
  } catch (const NumericalDivergence& e) {
    EXPECT_EQ(e.batch_index(), 1u);
    EXPECT_DOUBLE_EQ(e.learning_rate(), 1e-3);
  }
}

TEST(Training, ConfidentCorrectPredictionHasZeroLoss) {
  Mat<double> logits(2, 1);
  logits << 1000.0, 0.0;
  std::vector<int> y{0};
  EXPECT_EQ(cross_entropy(logits, y).loss, 0.0);
}

TEST(Training, FcnLearnsSyntheticTask) {
  SyntheticSpec spec;
  spec.per_class = 100;
  spec.length = 128;
  spec.seed = 3;
  Dataset train = make_synthetic(spec);
  spec.seed = 4;
  Dataset test = make_synthetic(spec);
  auto f = build_classifier(ClassifierArch::fcn, 128, 1, 2, 7);
  TrainConfig cfg;
  cfg.epochs = 10;
  auto tr = labeled(train), te = labeled(test);
  fit_classifier(f, std::span<const LabeledSeries>(tr), cfg);
  EXPECT_GE(accuracy(f, te), 95.0);
}

TEST(Training, TwoLayerClassifierSeparatesSynthetic) {
  SyntheticSpec spec;
  spec.per_class = 100;
  spec.length = 128;
  spec.seed = 10;
  Dataset train = make_synthetic(spec);
  spec.seed = 11;
  Dataset test = make_synthetic(spec);
  NetworkSpec ns;
  ns.kind = NetworkKind::classifier_fcn;
  ns.input_length = 128;
  ns.output_dim = 2;
  ns.layers = {LayerSpec{.op = LayerOp::conv1d, .kernel_size = 8, .channels = 16, .activation = ActivationKind::relu},
               LayerSpec{.op = LayerOp::pooling},
               LayerSpec{.op = LayerOp::dense, .channels = 2, .activation = ActivationKind::softmax}};
  Network<Real> f(ns, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 1e-2;
  auto tr = labeled(train), te = labeled(test);
  fit_classifier(f, std::span<const LabeledSeries>(tr), cfg);
  EXPECT_GE(accuracy(f, te), 95.0);
}

TEST(Training, SeededDeterminism) {
  SyntheticSpec spec;
  spec.per_class = 10;
  spec.length = 32;
  Dataset ds = make_synthetic(spec);
  auto data = labeled(ds);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 5;
  auto a = build_classifier(ClassifierArch::resnet, 32, 1, 2, 9, 0.125);
  auto b = build_classifier(ClassifierArch::resnet, 32, 1, 2, 9, 0.125);
  fit_classifier(a, std::span<const LabeledSeries>(data), cfg);
  fit_classifier(b, std::span<const LabeledSeries>(data), cfg);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.state(), b.state());
}

TEST(Checkpoint, RoundtripIsBitExact) {
  testing::TempDir dir;
  auto f = build_classifier(ClassifierArch::fcn, 64, 2, 3, 11, 0.25);
  save_checkpoint(f, dir / "m.ckpt", 11, {{"note", "probe"}});
  CheckpointInfo info;
  auto g = load_checkpoint<Real>(dir / "m.ckpt", &info);
  EXPECT_EQ(info.seed, 11u);
  EXPECT_EQ(info.metadata["note"], "probe");
  auto x = random_batch(4, 64, 2, 12);
  Activations<Real> xr{x.data.cast<Real>(), 4, 64};
  EXPECT_EQ((f.forward(xr).data - g.forward(xr).data).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Checkpoint, RejectsMismatchedSpecAndTampering) {
  testing::TempDir dir;
  auto f = build_classifier(ClassifierArch::fcn, 64, 1, 2, 1, 0.125);
  save_checkpoint(f, dir / "m.ckpt");
  EXPECT_THROW(load_checkpoint<Real>(dir / "m.ckpt", nullptr, classifier_spec(ClassifierArch::tcn, 64, 1, 2, 0.125)),
               CheckpointError);

  std::string bytes = testing::read_file(dir / "m.ckpt");
  auto pos = bytes.find("\"spec_hash\":\"");
  ASSERT_NE(pos, std::string::npos);
  std::string tampered = bytes;
  char& c = tampered[pos + 13];
  c = c == '0' ? '1' : '0';
  testing::write_file(dir / "t.ckpt", tampered);
  EXPECT_THROW(load_checkpoint<Real>(dir / "t.ckpt"), CheckpointError);

  std::string corrupt = bytes;
  corrupt[corrupt.size() - 3] ^= 0x5a;
  testing::write_file(dir / "c.ckpt", corrupt);
  EXPECT_THROW(load_checkpoint<Real>(dir / "c.ckpt"), CheckpointError);

  std::string version = bytes;
  auto vpos = version.find("\"format_version\":1");
  version[vpos + 17] = '9';
  testing::write_file(dir / "v.ckpt", version);
  EXPECT_THROW(load_checkpoint<Real>(dir / "v.ckpt"), CheckpointError);
}

}  // namespace
}  // namespace tsba
