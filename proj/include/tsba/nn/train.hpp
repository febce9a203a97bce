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

#include "tsba/data/dataset.hpp"
#include "tsba/nn/loss.hpp"
#include "tsba/nn/network.hpp"
#include "tsba/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tsba {

struct LabeledSeries {
  const MatrixD* values = nullptr;
  int label = 0;
};

inline std::vector<LabeledSeries> labeled(const Dataset& ds) {
  std::vector<LabeledSeries> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) out.push_back({&s.values, s.label});
  return out;
}

struct EarlyStopConfig {
  int patience = 0;  // 0 disables early stopping
  double validation_fraction = 0.1;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 100;
  std::uint64_t seed = 0;
  EarlyStopConfig early_stop;

  void validate() const {
    if (!(learning_rate >= 0)) throw ConfigError("learning_rate must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
  }
};

inline std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, int batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size))
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + static_cast<std::size_t>(batch_size))));
  return batches;
}

template <typename T>
Activations<T> gather(std::span<const LabeledSeries> data, std::span<const std::size_t> idx,
                      std::vector<int>* labels = nullptr) {
  std::vector<const MatrixD*> ptrs;
  ptrs.reserve(idx.size());
  if (labels) labels->clear();
  for (std::size_t i : idx) {
    ptrs.push_back(data[i].values);
    if (labels) labels->push_back(data[i].label);
  }
  return to_activations<T>(std::span<const MatrixD* const>(ptrs));
}

// One optimisation step on a batch; returns the batch mean loss.
template <typename T, typename Optimizer>
double train_step_ce(Network<T>& net, Optimizer& opt, const Activations<T>& x, std::span<const int> labels) {
  Workspace<T> ws;
  Activations<T> logits = net.forward_train(x, ws);
  LossResult<T> loss = cross_entropy(logits.data, labels);
  if (!std::isfinite(loss.loss)) return loss.loss;
  Vec<T> grad = Vec<T>::Zero(static_cast<Index>(net.parameter_count()));
  net.backward(loss.grad, ws, grad.data());
  opt.step(net.parameters(), grad);
  return loss.loss;
}

// One epoch of mini-batch cross-entropy descent over pre-formed batches.
// Returns the sample-weighted mean loss.
template <typename T, typename Optimizer>
double train_epoch_ce(Network<T>& net, Optimizer& opt, std::span<const LabeledSeries> data,
                      const std::vector<std::vector<std::size_t>>& batches) {
  double total = 0;
  std::size_t count = 0;
  std::vector<int> labels;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    Activations<T> x = gather<T>(data, batches[bi], &labels);
    for (int y : labels)
      if (y < 0 || y >= net.spec().output_dim) throw ConfigError("label out of range for classifier head");
    double l = train_step_ce(net, opt, x, labels);
    if (!std::isfinite(l)) throw NumericalDivergence("cross-entropy diverged", opt.learning_rate(), bi);
    total += l * static_cast<double>(batches[bi].size());
    count += batches[bi].size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

template <typename T, typename Optimizer>
double train_epoch_ce(Network<T>& net, Optimizer& opt, std::span<const LabeledSeries> data, int batch_size, Rng& rng) {
  return train_epoch_ce(net, opt, data, shuffled_batches(data.size(), batch_size, rng));
}

// Class probabilities (classes x N), evaluated in chunks in eval mode.
template <typename T>
Mat<T> predict_proba(const Network<T>& net, std::span<const MatrixD* const> series, std::size_t chunk = 64) {
  Mat<T> out(net.spec().output_dim, static_cast<Index>(series.size()));
  for (std::size_t i = 0; i < series.size(); i += chunk) {
    const std::size_t n = std::min(chunk, series.size() - i);
    Activations<T> x = to_activations<T>(series.subspan(i, n));
    out.middleCols(static_cast<Index>(i), static_cast<Index>(n)) = softmax(net.forward(x).data);
  }
  return out;
}

struct Prediction {
  int label = 0;
  VectorD probabilities;
};

template <typename T>
Prediction predict(const Network<T>& net, const MatrixD& values) {
  if (values.cols() != net.spec().input_variables)
    throw ShapeError("sample has " + std::to_string(values.cols()) + " variables, network expects " +
                     std::to_string(net.spec().input_variables));
  if (net.spec().input_length > 0 && values.rows() != net.spec().input_length && net.spec().is_classifier())
    throw ShapeError("sample has length " + std::to_string(values.rows()) + ", classifier expects " +
                     std::to_string(net.spec().input_length));
  const MatrixD* p = &values;
  Mat<T> probs = predict_proba(net, std::span<const MatrixD* const>(&p, 1));
  Prediction r;
  r.probabilities = probs.col(0).template cast<double>();
  Index arg;
  r.probabilities.maxCoeff(&arg);
  r.label = static_cast<int>(arg);
  return r;
}

template <typename T>
std::vector<int> predict_labels(const Network<T>& net, std::span<const MatrixD* const> series) {
  Mat<T> probs = predict_proba(net, series);
  std::vector<int> out(static_cast<std::size_t>(probs.cols()));
  for (Index j = 0; j < probs.cols(); ++j) {
    Index arg;
    probs.col(j).maxCoeff(&arg);
    out[static_cast<std::size_t>(j)] = static_cast<int>(arg);
  }
  return out;
}

template <typename T>
double accuracy(const Network<T>& net, std::span<const LabeledSeries> data) {
  if (data.empty()) throw EmptyDatasetError("accuracy of an empty set");
  std::vector<const MatrixD*> ptrs;
  for (const auto& d : data) ptrs.push_back(d.values);
  auto pred = predict_labels(net, std::span<const MatrixD* const>(ptrs));
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hit += pred[i] == data[i].label;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(data.size());
}

// Keeps the best-scoring snapshot; stop() once patience epochs pass without improvement.
template <typename Snapshot>
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool enabled() const { return patience_ > 0; }
  // Returns true when the score improved.
  bool observe(double score, const Snapshot& snap) {
    if (!best_ || score > best_score_) {
      best_score_ = score;
      best_ = snap;
      since_ = 0;
      return true;
    }
    ++since_;
    return false;
  }
  bool stop() const { return enabled() && since_ >= patience_; }
  const std::optional<Snapshot>& best() const { return best_; }
  double best_score() const { return best_score_; }

 private:
  int patience_;
  int since_ = 0;
  double best_score_ = 0;
  std::optional<Snapshot> best_;
};

struct FitResult {
  int epochs_run = 0;
  double final_loss = 0;
  double best_validation = -1;
};

// Plain supervised training with Adam. With a score function and a positive
// patience, the best-scoring parameters are restored at the end.
template <typename T>
FitResult fit_classifier(Network<T>& net, std::span<const LabeledSeries> train, const TrainConfig& cfg,
                         const std::function<double(const Network<T>&)>& score) {
  cfg.validate();
  Adam<T> opt(cfg.learning_rate);
  Rng rng = make_rng(cfg.seed, 0x464954ULL);
  EarlyStopper<Network<T>> stopper(score ? cfg.early_stop.patience : 0);
  FitResult r;
  for (int e = 0; e < cfg.epochs; ++e) {
    r.final_loss = train_epoch_ce(net, opt, train, cfg.batch_size, rng);
    r.epochs_run = e + 1;
    if (stopper.enabled()) {
      stopper.observe(score(net), net);
      if (stopper.stop()) break;
    }
  }
  if (stopper.enabled() && stopper.best()) {
    net = *stopper.best();
    r.best_validation = stopper.best_score();
  }
  return r;
}

// Early stopping, when enabled, monitors validation accuracy.
template <typename T>
FitResult fit_classifier(Network<T>& net, std::span<const LabeledSeries> train, const TrainConfig& cfg,
                         std::span<const LabeledSeries> validation = {}) {
  std::function<double(const Network<T>&)> score;
  if (!validation.empty()) score = [validation](const Network<T>& n) { return accuracy(n, validation); };
  return fit_classifier(net, train, cfg, score);
}

}  // namespace tsba
