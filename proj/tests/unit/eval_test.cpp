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

#include "test_util.hpp"

#include "tsba/data/synthetic.hpp"
#include "tsba/eval/fourier.hpp"
#include "tsba/eval/gradcam.hpp"
#include "tsba/eval/report.hpp"

#include <gtest/gtest.h>

#include <complex>
#include <numbers>

namespace tsba {
namespace {

TimeSeriesSample make_sample(MatrixD values, int label = 0) {
  TimeSeriesSample s;
  s.valid_length = values.rows();
  s.values = std::move(values);
  s.label = label;
  s.sample_id = "x";
  return s;
}

Dataset synthetic(int per_class, Index L, std::uint64_t seed, int classes = 2) {
  SyntheticSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.length = L;
  spec.seed = seed;
  return make_synthetic(spec);
}

// All-zero logits: every prediction is class 0 (first maximum).
Model constant_class0(Index L) {
  auto f = build_classifier<Real>(ClassifierArch::fcn, L, 1, 2, 1, 1.0 / 32);
  zero_final_layer(f);
  return f;
}

const Model& trained_fcn() {
  static const Model f = [] {
    auto ds = synthetic(40, 64, 3);
    auto m = build_classifier<Real>(ClassifierArch::fcn, 64, 1, 2, 4, 0.25);
    TrainConfig cfg;
    cfg.epochs = 15;
    auto data = labeled(ds);
    fit_classifier(m, std::span<const LabeledSeries>(data), cfg);
    return m;
  }();
  return f;
}

// ---- CA / ASR ----

TEST(CleanAccuracy, ConstantPredictorOnBalancedSet) {
  auto ds = synthetic(25, 32, 1);
  auto f = constant_class0(32);
  EXPECT_DOUBLE_EQ(clean_accuracy(f, ds), 50.0);
  EXPECT_DOUBLE_EQ(attack_success_rate(f, identity_stamp(), ds, 0), 100.0);
  Dataset empty = ds;
  empty.samples.clear();
  EXPECT_THROW(clean_accuracy(f, empty), EmptyDatasetError);
}

TEST(CleanAccuracy, MatchesCountingLoop) {
  auto ds = synthetic(30, 64, 5);
  const auto& f = trained_fcn();
  int hit = 0;
  for (const auto& s : ds.samples) hit += predict(f, s.values).label == s.label;
  EXPECT_DOUBLE_EQ(clean_accuracy(f, ds), 100.0 * hit / static_cast<double>(ds.size()));
}

TEST(AttackSuccessRate, IdentityStampIsMisclassificationIntoTarget) {
  auto ds = synthetic(30, 64, 6);
  const auto& f = trained_fcn();
  for (int target : {0, 1}) {
    int into = 0, n = 0;
    for (const auto& s : ds.samples) {
      if (s.label == target) continue;
      ++n;
      into += predict(f, s.values).label == target;
    }
    EXPECT_DOUBLE_EQ(attack_success_rate(f, identity_stamp(), ds, target), 100.0 * into / n);
  }
}

TEST(AttackSuccessRate, UndefinedWhenAllSamplesAreTarget) {
  auto ds = synthetic(5, 32, 7);
  Dataset only0 = ds;
  std::erase_if(only0.samples, [](const auto& s) { return s.label != 0; });
  EXPECT_THROW(attack_success_rate(constant_class0(32), identity_stamp(), only0, 0), EmptyDatasetError);
}

// ---- RMS stealthiness ----

TEST(RmsStealth, ZeroAndConstantTriggers) {
  Rng rng(8);
  std::vector<TimeSeriesSample> xs;
  std::vector<MatrixD> same, shifted;
  for (int i = 0; i < 10; ++i) {
    MatrixD v = MatrixD::Random(50, 1);
    xs.push_back(make_sample(v));
    same.push_back(v);
    const double amp = v.maxCoeff() - v.minCoeff();
    shifted.push_back(v.array() + 0.1 * amp);
  }
  std::vector<const TimeSeriesSample*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  auto zero = rms_stealth(std::span<const TimeSeriesSample* const>(ptrs), std::span<const MatrixD>(same));
  EXPECT_EQ(zero.rms_all, 0.0);
  EXPECT_EQ(zero.rms_top1, 0.0);
  auto c = rms_stealth(std::span<const TimeSeriesSample* const>(ptrs), std::span<const MatrixD>(shifted));
  EXPECT_NEAR(c.rms_all, 0.1, 1e-12);
  EXPECT_NEAR(c.rms_top1, 0.1, 1e-12);
}

TEST(RmsStealth, BruteForceOracle) {
  Rng rng(9);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Index L = 30 + trial, D = 1 + trial % 3;
    MatrixD x(L, D), p(L, D);
    for (Index i = 0; i < x.size(); ++i) {
      x.data()[i] = n(rng);
      p.data()[i] = 0.05 * n(rng);
    }
    auto s = make_sample(x);
    double amp = 0;
    for (Index d = 0; d < D; ++d) amp += x.col(d).maxCoeff() - x.col(d).minCoeff();
    amp /= static_cast<double>(D);
    std::vector<double> all;
    for (Index i = 0; i < p.size(); ++i) all.push_back(p.data()[i]);
    std::sort(all.begin(), all.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    const std::size_t k = (all.size() + 99) / 100;
    double sa = 0, st = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      sa += all[i] * all[i];
      if (i < k) st += all[i] * all[i];
    }
    auto r = sample_rms(s, x + p);
    ASSERT_NEAR(r.all, std::sqrt(sa / static_cast<double>(all.size())) / amp, 1e-12);
    ASSERT_NEAR(r.top1, std::sqrt(st / static_cast<double>(k)) / amp, 1e-12);
  }
}

TEST(RmsStealth, ZeroAmplitudeVariablesExcluded) {
  MatrixD x(40, 2);
  x.col(0) = VectorD::LinSpaced(40, 0, 1);
  x.col(1).setConstant(3);
  MatrixD p = x;
  p.col(0).array() += 0.1;
  p.col(1).array() += 7;  // ignored: variable 1 is flat
  auto r = sample_rms(make_sample(x), p);
  EXPECT_EQ(r.excluded_variables, 1u);
  EXPECT_NEAR(r.all, 0.1, 1e-12);
  EXPECT_THROW(sample_rms(make_sample(MatrixD::Constant(10, 2, 1.0)), MatrixD::Zero(10, 2)), ConfigError);
}

TEST(RmsStealth, GeneratorTriggersWithinBudget) {
  auto ds = synthetic(20, 64, 10);
  auto g = build_trigger_generator<Real>(64, 1, 3, 1.0 / 16);
  std::vector<const TimeSeriesSample*> ptrs;
  for (const auto& s : ds.samples) ptrs.push_back(&s);
  auto out = apply_generator(g, std::span<const TimeSeriesSample* const>(ptrs), 0.1);
  auto r = rms_stealth(std::span<const TimeSeriesSample* const>(ptrs), std::span<const MatrixD>(out));
  EXPECT_GT(r.rms_all, 0.0);
  EXPECT_LE(r.rms_all, 0.1 + 1e-9);
  EXPECT_LE(r.rms_top1, 0.1 + 1e-9);
}

TEST(RmsStealth, StaticNoiseMatchesSinusoidRms) {
  // Peak-to-peak a * amp sinusoid sampled over whole periods: RMS = a / (2 sqrt 2).
  auto ds = synthetic(10, 100, 11);
  const VectorD tmpl = sinusoid_template(20);
  std::vector<const TimeSeriesSample*> ptrs;
  std::vector<MatrixD> out;
  for (const auto& s : ds.samples) {
    ptrs.push_back(&s);
    out.push_back(static_noise(s, tmpl, 0.1));
  }
  auto r = rms_stealth(std::span<const TimeSeriesSample* const>(ptrs), std::span<const MatrixD>(out));
  // The 20-point template peaks at sin(pi/2) and troughs at sin(3pi/2): exact.
  EXPECT_NEAR(r.rms_all, 0.1 / (2 * std::sqrt(2.0)), 1e-9);
}

// ---- Fourier ----

TEST(Fourier, ConstantSeriesIsAllDc) {
  MatrixD x = MatrixD::Constant(64, 2, 1.5);
  MatrixD m = fourier_magnitude(x);
  ASSERT_EQ(m.rows(), 33);
  for (Index d = 0; d < 2; ++d) {
    EXPECT_NEAR(m(0, d), 1.5 * 64, 1e-9);
    EXPECT_LE(m.col(d).tail(32).maxCoeff(), 1e-9);
  }
}

TEST(Fourier, SinusoidHasOneLine) {
  const Index L = 128;
  MatrixD x(L, 1);
  for (Index t = 0; t < L; ++t) x(t, 0) = std::sin(2 * std::numbers::pi * 8.0 * static_cast<double>(t) / L);
  MatrixD m = fourier_magnitude(x);
  Index arg;
  m.col(0).maxCoeff(&arg);
  EXPECT_EQ(arg, 8);
  EXPECT_NEAR(m(8, 0), L / 2.0, 1e-9);
  EXPECT_THROW(fourier_magnitude(MatrixD::Zero(1, 1)), ShapeError);
}

TEST(Fourier, MatchesNaiveDftAndParseval) {
  Rng rng(12);
  std::normal_distribution<double> n(0, 1);
  std::uniform_int_distribution<Index> len(2, 300);
  for (int trial = 0; trial < 200; ++trial) {
    const Index L = len(rng);
    MatrixD x(L, 1);
    for (Index t = 0; t < L; ++t) x(t, 0) = n(rng);
    MatrixD m = fourier_magnitude(x);
    ASSERT_EQ(m.rows(), L / 2 + 1);
    for (Index k = 0; k <= L / 2; ++k) {
      std::complex<double> acc = 0;
      for (Index t = 0; t < L; ++t)
        acc += x(t, 0) * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(L));
      ASSERT_NEAR(m(k, 0), std::abs(acc), 1e-8 * std::max(1.0, std::abs(acc)));
    }
    // Rebuild the full two-sided energy from the one-sided magnitudes.
    double spec = m(0, 0) * m(0, 0);
    for (Index k = 1; k <= L / 2; ++k) spec += (L % 2 == 0 && k == L / 2 ? 1.0 : 2.0) * m(k, 0) * m(k, 0);
    const double energy = x.squaredNorm();
    ASSERT_NEAR(spec / static_cast<double>(L), energy, 1e-6 * energy);
  }
}

// ---- Grad-CAM ----

TEST(GradCam, ShapeRangeAndDeterminism) {
  const auto& f = trained_fcn();
  auto ds = synthetic(3, 64, 13);
  for (const auto& s : ds.samples) {
    VectorD a = grad_cam_1d(f, s.values, s.label);
    VectorD b = grad_cam_1d(f, s.values, s.label);
    ASSERT_EQ(a.size(), 64);
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_LE(a.maxCoeff(), 1.0);
    EXPECT_EQ(a, b);
  }
}

TEST(GradCam, LstmIsUnsupported) {
  auto f = build_classifier<Real>(ClassifierArch::lstm, 32, 1, 2, 1, 1.0 / 16);
  EXPECT_THROW(grad_cam_1d(f, MatrixD::Zero(32, 1), 0), UnsupportedArchitecture);
}

TEST(GradCam, InvariantToPositiveLogitScaling) {
  Model f = trained_fcn();
  auto ds = synthetic(2, 64, 14);
  VectorD before = grad_cam_1d(f, ds.samples[0].values, 0);
  // Scale the dense head (weights and bias) by 3: logits and their gradients scale by 3.
  const auto& head = *f.layers().back();
  f.parameters().segment(static_cast<Index>(head.param_offset), static_cast<Index>(head.param_count)) *= 3.0f;
  VectorD after = grad_cam_1d(f, ds.samples[0].values, 0);
  EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-4);
}

double spearman(const VectorD& a, const VectorD& b) {
  auto ranks = [](const VectorD& v) {
    std::vector<Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Index i, Index j) { return v(i) < v(j); });
    VectorD r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r(idx[k]) = static_cast<double>(k);
    return r;
  };
  VectorD ra = ranks(a), rb = ranks(b);
  ra.array() -= ra.mean();
  rb.array() -= rb.mean();
  return ra.dot(rb) / std::sqrt(ra.squaredNorm() * rb.squaredNorm());
}

TEST(GradCam, AgreesWithOcclusionSensitivity) {
  const auto& f = trained_fcn();
  auto ds = synthetic(5, 64, 15);
  double mean_rho = 0;
  for (const auto& s : ds.samples) {
    const int c = predict(f, s.values).label;
    VectorD cam = grad_cam_1d(f, s.values, c);
    auto score = [&](const MatrixD& v) {
      Activations<Real> logits = f.forward(to_activations<Real>(v));
      return static_cast<double>(logits.data(c, 0));
    };
    const double base = score(s.values);
    const double mean = s.values.mean();
    // Drop in score when a 9-step window centred on t is replaced by the series mean.
    VectorD drop(64), cam_window(64);
    for (Index t = 0; t < 64; ++t) {
      const Index a = std::max<Index>(0, t - 4), b = std::min<Index>(63, t + 4);
      MatrixD occ = s.values;
      occ.block(a, 0, b - a + 1, 1).setConstant(mean);
      drop(t) = base - score(occ);
      cam_window(t) = cam.segment(a, b - a + 1).mean();
    }
    mean_rho += spearman(cam_window, drop);
  }
  mean_rho /= static_cast<double>(ds.size());
  EXPECT_GT(mean_rho, 0.0);
}

// ---- reports ----

TEST(CrossVal, TwoFoldsMeanAndDeterminism) {
  auto ds = synthetic(12, 32, 16);
  ExperimentSettings s;
  s.attack = AttackKind::vanilla_fixed;
  s.width = 1.0 / 16;
  s.attack_cfg.poison_rate = 0.2;
  s.attack_cfg.classifier.epochs = 2;
  auto a = crossval_run(ds, s, 2, 7);
  ASSERT_EQ(a.folds.size(), 2u);
  const auto m = a.means();
  EXPECT_DOUBLE_EQ(m.ca, (a.folds[0].ca + a.folds[1].ca) / 2);
  EXPECT_DOUBLE_EQ(m.asr, (a.folds[0].asr + a.folds[1].asr) / 2);
  EXPECT_DOUBLE_EQ(m.clean_ca, (a.folds[0].clean_ca + a.folds[1].clean_ca) / 2);
  auto b = crossval_run(ds, s, 2, 7);
  EXPECT_EQ(report_csv(a), report_csv(b));
  // Folds in the other order give the same means.
  EvaluationReport swapped = a;
  std::swap(swapped.folds[0], swapped.folds[1]);
  EXPECT_DOUBLE_EQ(swapped.means().ca, m.ca);
  const std::string csv = report_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find(",mean,"), std::string::npos);
  auto j = report_json(a);
  EXPECT_EQ(j["fold_count"], 2);
}

TEST(CrossVal, CsvMeanRowRecomputes) {
  EvaluationReport r;
  r.dataset = "d";
  r.arch = "fcn";
  r.attack = "tsba_a";
  for (int i = 0; i < 3; ++i) {
    FoldResult f;
    f.fold = i;
    f.ca = 90 + i;
    f.asr = 80 + 2 * i;
    f.rms_all = 0.01 * (i + 1);
    r.folds.push_back(f);
  }
  std::istringstream in(report_csv(r));
  std::string line;
  std::getline(in, line);  // header
  double sum_ca = 0, mean_ca = -1;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells[5] == "mean")
      mean_ca = std::stod(cells[7]);
    else
      sum_ca += std::stod(cells[7]);
  }
  EXPECT_DOUBLE_EQ(mean_ca, sum_ca / 3);
}

}  // namespace
}  // namespace tsba
