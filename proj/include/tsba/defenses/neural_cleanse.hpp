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
#include "tsba/defenses/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

namespace tsba {

struct NeuralCleanseConfig {
  double lambda = 1e-2;  // weight of the mask L1 term
  int steps = 300;
  int batch_size = 16;
  double learning_rate = 0.05;
  double anomaly_threshold = 2.0;
  bool unlearn = true;
  int unlearn_epochs = 5;
  double unlearn_fraction = 0.2;  // share of clean samples stamped with the reversed trigger
  double unlearn_learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct ReversedTrigger {
  int target = 0;
  MatrixD mask;     // L x D in [0, 1]
  MatrixD pattern;  // L x D within the data range
  double l1 = 0;
  double attack_rate = 0;  // share of clean non-target samples sent to target
  double anomaly_index = 0;
  bool flagged = false;
};

inline MatrixD apply_reversed_trigger(const MatrixD& x, const ReversedTrigger& t) {
  return (1.0 - t.mask.array()) * x.array() + t.mask.array() * t.pattern.array();
}

// MAD-based anomaly index of each norm; only unusually small norms flag.
inline std::vector<double> anomaly_indices(const std::vector<double>& norms) {
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med = median(norms);
  std::vector<double> dev;
  for (double v : norms) dev.push_back(std::abs(v - med));
  const double mad = 1.4826 * median(dev);
  std::vector<double> out;
  for (double v : norms) out.push_back(mad > 0 ? std::abs(v - med) / mad : 0.0);
  return out;
}

namespace detail {

// Mask and pattern for one target class by projected Adam on
// CE(f((1-m)x + m p), c) + lambda |m|_1.
template <typename T>
ReversedTrigger reverse_engineer(const Network<T>& f, const Dataset& clean, int target, const NeuralCleanseConfig& cfg,
                                 double lo, double hi, Rng& rng) {
  const Index L = clean.length, D = clean.variables;
  Activations<T> all = to_activations<T>(std::span<const MatrixD* const>(sample_ptrs(clean)));
  // (L x D) matrices are kept in the activation layout (D x L), shared by the batch.
  Mat<T> m = Mat<T>::Constant(D, L, T(0.5));
  Mat<T> p(D, L);
  std::uniform_real_distribution<double> u(lo, hi);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<T>(u(rng));
  Vec<T> theta(2 * D * L), grad(2 * D * L);
  Adam<T> opt(cfg.learning_rate);
  const auto n = static_cast<Index>(clean.size());
  const Index bs = std::min<Index>(cfg.batch_size, n);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (int step = 0; step < cfg.steps; ++step) {
    Activations<T> x{Mat<T>(D, bs * L), bs, L};
    for (Index b = 0; b < bs; ++b) x.data.middleCols(b * L, L) = all.data.middleCols(pick(rng) * L, L);
    Activations<T> xs{x.data, bs, L};
    for (Index b = 0; b < bs; ++b) {
      auto blk = xs.data.middleCols(b * L, L);
      blk = (Mat<T>::Ones(D, L) - m).cwiseProduct(blk) + m.cwiseProduct(p);
    }
    Workspace<T> ws;
    Activations<T> logits = f.forward(xs, &ws);
    std::vector<int> labels(static_cast<std::size_t>(bs), target);
    LossResult<T> loss = cross_entropy(logits.data, labels);
    if (!std::isfinite(static_cast<double>(loss.loss)))
      throw NumericalDivergence("reverse-engineering loss is not finite", cfg.learning_rate,
                                static_cast<std::size_t>(step));
    Mat<T> dx = f.backward(loss.grad, ws, nullptr);
    Mat<T> gm = Mat<T>::Constant(D, L, static_cast<T>(cfg.lambda)), gp = Mat<T>::Zero(D, L);
    for (Index b = 0; b < bs; ++b) {
      auto g = dx.middleCols(b * L, L);
      gm += g.cwiseProduct(p - x.data.middleCols(b * L, L));
      gp += g.cwiseProduct(m);
    }
    theta << Eigen::Map<Vec<T>>(m.data(), m.size()), Eigen::Map<Vec<T>>(p.data(), p.size());
    grad << Eigen::Map<Vec<T>>(gm.data(), gm.size()), Eigen::Map<Vec<T>>(gp.data(), gp.size());
    opt.step(theta, grad);
    m = Eigen::Map<Mat<T>>(theta.data(), D, L).cwiseMax(T(0)).cwiseMin(T(1));
    p = Eigen::Map<Mat<T>>(theta.data() + D * L, D, L).cwiseMax(static_cast<T>(lo)).cwiseMin(static_cast<T>(hi));
  }
  ReversedTrigger t;
  t.target = target;
  t.mask = m.transpose().template cast<double>();
  t.pattern = p.transpose().template cast<double>();
  t.l1 = t.mask.sum();
  std::vector<MatrixD> stamped;
  std::vector<const MatrixD*> ptrs;
  for (const auto& s : clean.samples)
    if (s.label != target) stamped.push_back(apply_reversed_trigger(s.values, t));
  for (const auto& s : stamped) ptrs.push_back(&s);
  if (!ptrs.empty()) {
    auto pred = predict_labels(f, std::span<const MatrixD* const>(ptrs));
    t.attack_rate = 100.0 * static_cast<double>(std::count(pred.begin(), pred.end(), target)) /
                    static_cast<double>(pred.size());
  }
  return t;
}

}  // namespace detail

// Reverse-engineers a minimal trigger per class, flags classes whose mask
// norm is anomalously small and, optionally, unlearns the suspected trigger
// by fine-tuning on clean data partly stamped with it under true labels.
// With nothing flagged, the smallest-norm class is treated as the suspect.
template <typename T>
DefenseOutcome<T> neural_cleanse(const Network<T>& f, const Dataset& clean, const NeuralCleanseConfig& cfg,
                                 std::vector<ReversedTrigger>* triggers = nullptr) {
  if (clean.empty()) throw EmptyDatasetError("Neural Cleanse needs clean data");
  if (!(cfg.unlearn_fraction >= 0 && cfg.unlearn_fraction <= 1)) throw ConfigError("unlearn_fraction must be in [0, 1]");
  DefenseOutcome<T> out{f, DefenseKind::nc};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : clean.samples) {
    lo = std::min(lo, s.valid().minCoeff());
    hi = std::max(hi, s.valid().maxCoeff());
  }
  Rng rng = make_rng(cfg.seed, 0x4e43ULL);
  std::vector<ReversedTrigger> found;
  try {
    for (int c = 0; c < f.spec().output_dim; ++c) found.push_back(detail::reverse_engineer(f, clean, c, cfg, lo, hi, rng));
  } catch (const NumericalDivergence& e) {
    out.failed = true;
    out.failure = e.what();
    return out;
  }
  std::vector<double> norms;
  for (const auto& t : found) norms.push_back(t.l1);
  const auto idx = anomaly_indices(norms);
  const double med = [&] {
    std::vector<double> v = norms;
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  }();
  std::vector<int> suspects;
  for (std::size_t c = 0; c < found.size(); ++c) {
    found[c].anomaly_index = idx[c];
    found[c].flagged = idx[c] > cfg.anomaly_threshold && found[c].l1 < med;
    if (found[c].flagged) suspects.push_back(static_cast<int>(c));
  }
  const bool detected = !suspects.empty();
  if (!detected)
    suspects.push_back(static_cast<int>(std::min_element(norms.begin(), norms.end()) - norms.begin()));

  nlohmann::json classes = nlohmann::json::array();
  for (const auto& t : found)
    classes.push_back({{"class", t.target}, {"mask_l1", t.l1}, {"anomaly_index", t.anomaly_index},
                       {"flagged", t.flagged}, {"attack_rate", t.attack_rate}});
  out.artifacts["classes"] = classes;
  out.artifacts["detected"] = detected;
  out.artifacts["unlearned_classes"] = suspects;

  if (cfg.unlearn && cfg.unlearn_epochs > 0) {
    Dataset mixed = clean;
    std::vector<std::size_t> order(mixed.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(cfg.unlearn_fraction * static_cast<double>(mixed.size())));
    for (std::size_t j = 0; j < k; ++j) {
      auto& s = mixed.samples[order[j]];
      s.values = apply_reversed_trigger(s.values, found[static_cast<std::size_t>(suspects[j % suspects.size()])]);
    }
    Adam<T> opt(cfg.unlearn_learning_rate);
    auto data = labeled(mixed);
    try {
      for (int e = 0; e < cfg.unlearn_epochs; ++e)
        train_epoch_ce(out.model, opt, std::span<const LabeledSeries>(data), cfg.batch_size, rng);
    } catch (const NumericalDivergence& e) {
      out.model = f;
      out.failed = true;
      out.failure = e.what();
    }
  }
  if (triggers) *triggers = std::move(found);
  return out;
}

// Writes mask and pattern of each reversed trigger as CSV matrices.
inline void export_reversed_triggers(const std::filesystem::path& dir, const std::vector<ReversedTrigger>& triggers) {
  std::filesystem::create_directories(dir);
  for (const auto& t : triggers) {
    write_values_csv(t.mask, dir / ("nc_mask_class" + std::to_string(t.target) + ".csv"));
    write_values_csv(t.pattern, dir / ("nc_pattern_class" + std::to_string(t.target) + ".csv"));
  }
}

}  // namespace tsba
