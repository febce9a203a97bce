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

#include "tsba/data/dataset.hpp"
#include "tsba/data/folds.hpp"
#include "tsba/data/io.hpp"
#include "tsba/data/synthetic.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

namespace tsba {
namespace {

using testing::TempDir;
using testing::read_file;
using testing::write_file;

TEST(UnivariateTsv, MinimalRow) {
  TempDir dir;
  write_file(dir / "one.tsv", "0\t1.0\t2.0\n");
  Dataset ds = load_univariate_tsv(dir / "one.tsv");
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.length, 2);
  EXPECT_EQ(ds.variables, 1);
  EXPECT_EQ(ds.num_classes, 1);
  EXPECT_DOUBLE_EQ(ds.samples[0].values(1, 0), 2.0);
}

TEST(UnivariateTsv, LabelsRemappedByAscendingValue) {
  std::istringstream in("2\t1\t2\n-1\t3\t4\n1.0000000e+00\t5\t6\n2\t7\t8\n");
  Dataset ds = parse_univariate_tsv(in, "x");
  ASSERT_EQ(ds.num_classes, 3);
  EXPECT_EQ(ds.class_labels, (std::vector<std::string>{"-1", "1", "2"}));
  EXPECT_EQ(ds.samples[0].label, 2);
  EXPECT_EQ(ds.samples[1].label, 0);
  EXPECT_EQ(ds.samples[2].label, 1);
}

TEST(UnivariateTsv, MalformedRowNamesLine) {
  std::istringstream in("0\t1\t2\n1\t3\tabc\n");
  try {
    parse_univariate_tsv(in, "bad");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(UnivariateTsv, InconsistentLengthIsShapeError) {
  std::istringstream in("0\t1\t2\t3\n1\t3\t4\n");
  EXPECT_THROW(parse_univariate_tsv(in, "bad"), ShapeError);
}

TEST(UnivariateTsv, EmptyFile) {
  std::istringstream in("");
  EXPECT_THROW(parse_univariate_tsv(in, "empty"), EmptyDatasetError);
}

// Files written in canonical form (shortest decimal, integer labels) must
// survive load -> write byte for byte.
TEST(UnivariateTsv, CanonicalRoundtripOnRandomFiles) {
  Rng rng(1234);
  std::uniform_int_distribution<int> len(2, 40), rows(1, 12), label(0, 4), ip(0, 999), ndig(0, 3), dig(0, 9);
  for (int file = 0; file < 100; ++file) {
    const int L = len(rng);
    std::ostringstream text;
    const int n = rows(rng);
    for (int r = 0; r < n; ++r) {
      text << label(rng);
      for (int t = 0; t < L; ++t) {
        int whole = ip(rng);
        int digits = ndig(rng);
        std::string frac;
        for (int k = 0; k < digits; ++k) frac += static_cast<char>('0' + dig(rng));
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        bool neg = (dig(rng) % 2) && (whole != 0 || !frac.empty());
        text << '\t' << (neg ? "-" : "") << whole << (frac.empty() ? "" : "." + frac);
      }
      text << '\n';
    }
    std::istringstream in(text.str());
    Dataset ds = parse_univariate_tsv(in, "r");
    std::ostringstream out;
    write_univariate_tsv(ds, out);
    ASSERT_EQ(out.str(), text.str()) << "file " << file;
  }
}

TEST(UnivariateTsv, LoadIsIdempotent) {
  std::istringstream in("1.0000000e+00\t0.30000000000000004\t-2.5e-3\n2\t1e2\t+4\n");
  Dataset a = parse_univariate_tsv(in, "x");
  std::ostringstream once;
  write_univariate_tsv(a, once);
  std::istringstream in2(once.str());
  Dataset b = parse_univariate_tsv(in2, "x");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
    EXPECT_EQ(a.samples[i].values, b.samples[i].values);
  }
  EXPECT_EQ(a.class_labels, b.class_labels);
}

TEST(UnivariateTsv, BirdChickenShapeIfPresent) {
  auto path = testing::ucr_file("BirdChicken", "TRAIN");
  if (path.empty()) GTEST_SKIP() << "BirdChicken not available (set TSBA_UCR_DIR)";
  Dataset ds = load_univariate_tsv(path);
  EXPECT_EQ(ds.size(), 20u);
  EXPECT_EQ(ds.length, 512);
  EXPECT_EQ(ds.variables, 1);
  EXPECT_EQ(ds.num_classes, 2);
}

class MultivariateTest : public ::testing::Test {
 protected:
  void write_sample(const std::string& name, const MatrixD& m) { write_values_csv(m, dir_ / name); }
  TempDir dir_;
};

TEST_F(MultivariateTest, PadsShorterSamplesAtTail) {
  MatrixD a(3, 2), b(5, 2);
  a << 1, 2, 3, 4, 5, 6;
  b << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
  write_sample("a.csv", a);
  write_sample("b.csv", b);
  write_file(dir_ / "m.json",
             R"({"name":"toy","num_classes":2,"samples":[{"label":"1","values_file":"a.csv"},)"
             R"({"label":"2","values_file":"b.csv"}]})");
  Dataset ds = load_multivariate(dir_ / "m.json");
  EXPECT_EQ(ds.length, 5);
  EXPECT_EQ(ds.variables, 2);
  EXPECT_EQ(ds.samples[0].valid_length, 3);
  EXPECT_EQ(ds.samples[1].valid_length, 5);
  EXPECT_TRUE(ds.samples[0].values.bottomRows(2).isZero());
  // pad-then-crop recovers the original values exactly
  EXPECT_EQ(crop_valid(ds.samples[0]), a);
  EXPECT_EQ(crop_valid(ds.samples[1]), b);
}

TEST_F(MultivariateTest, PadCropRoundtripRandom) {
  Rng rng(7);
  std::uniform_int_distribution<int> len(2, 30);
  std::vector<MatrixD> originals;
  std::string samples;
  for (int i = 0; i < 20; ++i) {
    MatrixD m = MatrixD::Random(len(rng), 3);
    originals.push_back(m);
    write_sample("s" + std::to_string(i) + ".csv", m);
    samples += std::string(i ? "," : "") + R"({"label":)" + std::to_string(i % 2) + R"(,"values_file":"s)" +
               std::to_string(i) + R"(.csv"})";
  }
  write_file(dir_ / "m.json", R"({"name":"rnd","samples":[)" + samples + "]}");
  Dataset ds = load_multivariate(dir_ / "m.json");
  for (std::size_t i = 0; i < originals.size(); ++i) {
    EXPECT_EQ(crop_valid(ds.samples[i]), originals[i]);
    EXPECT_TRUE(ds.samples[i].values.bottomRows(ds.length - ds.samples[i].valid_length).isZero());
  }
}

TEST_F(MultivariateTest, MissingFileAndVariableMismatch) {
  write_file(dir_ / "missing.json", R"({"samples":[{"label":0,"values_file":"nope.csv"}]})");
  EXPECT_THROW(load_multivariate(dir_ / "missing.json"), IoError);
  write_sample("d2.csv", MatrixD::Ones(4, 2));
  write_sample("d3.csv", MatrixD::Ones(4, 3));
  write_file(dir_ / "mismatch.json",
             R"({"samples":[{"label":0,"values_file":"d2.csv"},{"label":1,"values_file":"d3.csv"}]})");
  EXPECT_THROW(load_multivariate(dir_ / "mismatch.json"), ShapeError);
}

TEST(Amplitude, Basics) {
  TimeSeriesSample s;
  s.values = MatrixD::Constant(3, 1, 5.0);
  s.valid_length = 3;
  EXPECT_EQ(amplitude(s)(0), 0.0);
  s.values << 0, 1, 2;
  EXPECT_EQ(amplitude(s)(0), 2.0);
}

TEST(Amplitude, MatchesBruteForceAndIsTranslationInvariant) {
  Rng rng(3);
  std::uniform_real_distribution<double> shift(-100, 100);
  for (int trial = 0; trial < 50; ++trial) {
    TimeSeriesSample s;
    s.values = MatrixD::Random(128, 3) * 4.0;
    s.valid_length = 128;
    VectorD amp = amplitude(s);
    for (Index d = 0; d < 3; ++d) {
      double lo = s.values(0, d), hi = s.values(0, d);
      for (Index t = 1; t < 128; ++t) {
        lo = std::min(lo, s.values(t, d));
        hi = std::max(hi, s.values(t, d));
      }
      EXPECT_EQ(amp(d), hi - lo);
      EXPECT_GE(amp(d), 0.0);
    }
    TimeSeriesSample shifted = s;
    shifted.values.array() += shift(rng);
    EXPECT_TRUE(amplitude(shifted).isApprox(amp, 1e-9));
  }
}

TEST(Amplitude, IgnoresPadding) {
  TimeSeriesSample s;
  s.values = MatrixD::Zero(5, 1);
  s.values << 3, 4, 5, 0, 0;
  s.valid_length = 3;
  EXPECT_EQ(amplitude(s)(0), 2.0);
}

Dataset labelled_dataset(const std::vector<int>& labels, int classes) {
  Dataset ds;
  ds.name = "folds";
  ds.num_classes = classes;
  ds.length = 2;
  ds.variables = 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    TimeSeriesSample s;
    s.values = MatrixD::Zero(2, 1);
    s.valid_length = 2;
    s.label = labels[i];
    s.sample_id = "s" + std::to_string(i);
    ds.samples.push_back(s);
  }
  return ds;
}

std::vector<std::map<int, int>> fold_class_counts(const Dataset& ds, const FoldSplit& split) {
  std::vector<std::map<int, int>> counts(static_cast<std::size_t>(split.k));
  for (const auto& s : ds.samples) counts[static_cast<std::size_t>(split.assignments.at(s.sample_id))][s.label]++;
  return counts;
}

TEST(StratifiedKFold, BalancedTwentySamples) {
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 2);
  Dataset ds = labelled_dataset(labels, 2);
  FoldSplit split = stratified_kfold(ds, 10, 42);
  auto counts = fold_class_counts(ds, split);
  for (auto& c : counts) {
    EXPECT_EQ(c[0], 1);
    EXPECT_EQ(c[1], 1);
  }
  EXPECT_EQ(stratified_kfold(ds, 10, 42).assignments, split.assignments);
}

TEST(StratifiedKFold, LargeFiveClassCountsWithinOne) {
  Rng rng(5);
  std::uniform_int_distribution<int> cls(0, 4);
  std::vector<int> labels(5000);
  for (auto& l : labels) l = cls(rng);
  Dataset ds = labelled_dataset(labels, 5);
  FoldSplit split = stratified_kfold(ds, 10, 9);
  std::map<int, int> totals;
  for (int l : labels) totals[l]++;
  auto counts = fold_class_counts(ds, split);
  for (const auto& [c, n] : totals)
    for (auto& fold : counts) EXPECT_LE(std::abs(fold[c] - n / 10.0), 1.0) << "class " << c;
}

TEST(StratifiedKFold, RejectsKAboveN) {
  Dataset ds = labelled_dataset({0, 1, 0}, 2);
  EXPECT_THROW(stratified_kfold(ds, 4, 0), ConfigError);
  EXPECT_THROW(stratified_kfold(ds, 1, 0), ConfigError);
}

TEST(StratifiedKFold, PartitionPropertyOnRandomDatasets) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nclass(2, 6), nsamp(2, 60);
    const int C = nclass(rng);
    std::vector<int> labels(static_cast<std::size_t>(std::max(C, nsamp(rng))));
    std::uniform_int_distribution<int> cls(0, C - 1);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < static_cast<std::size_t>(C) ? static_cast<int>(i) : cls(rng);
    Dataset ds = labelled_dataset(labels, C);
    std::uniform_int_distribution<int> kd(2, static_cast<int>(std::min<std::size_t>(labels.size(), 10)));
    FoldSplit split = stratified_kfold(ds, kd(rng), static_cast<std::uint64_t>(trial));
    std::set<std::size_t> seen;
    for (int f = 0; f < split.k; ++f) {
      auto [train, test] = split.indices(ds, f);
      EXPECT_EQ(train.size() + test.size(), ds.size());
      for (std::size_t i : test) EXPECT_TRUE(seen.insert(i).second);
    }
    EXPECT_EQ(seen.size(), ds.size());
  }
}

TEST(Synthetic, ShapesAndLabelCoverage) {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.per_class = 10;
  spec.length = 128;
  spec.variables = 2;
  Dataset ds = make_synthetic(spec);
  EXPECT_EQ(ds.size(), 30u);
  std::set<int> labels;
  for (const auto& s : ds.samples) {
    EXPECT_EQ(s.values.rows(), 128);
    EXPECT_EQ(s.values.cols(), 2);
    labels.insert(s.label);
  }
  EXPECT_EQ(labels, (std::set<int>{0, 1, 2}));
  EXPECT_NO_THROW(validate(ds));
}

TEST(Synthetic, SeedDeterminism) {
  SyntheticSpec spec;
  spec.seed = 77;
  Dataset a = make_synthetic(spec), b = make_synthetic(spec);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].values, b.samples[i].values);
  spec.seed = 78;
  EXPECT_NE(make_synthetic(spec).samples[0].values, a.samples[0].values);
}

TEST(Synthetic, RejectsSingleClass) {
  SyntheticSpec spec;
  spec.classes = 1;
  EXPECT_THROW(make_synthetic(spec), ConfigError);
}

}  // namespace
}  // namespace tsba
