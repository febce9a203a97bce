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

#include "tsba/nn/layers.hpp"
#include "tsba/nn/spec.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tsba {

template <typename T>
struct Workspace {
  std::vector<nn::LayerCache<T>> caches;
  Activations<T> feature;  // output of the feature layer, when the network has one
};

// Channels of a prunable group; state holds [mask(channels), perturbation(channels)].
struct GateGroup {
  std::size_t state_offset = 0;
  Index channels = 0;
  std::size_t layer = 0;  // top-level layer index that owns or contains the gate
};

// Trainable instantiation of a NetworkSpec. Parameters and running state are
// flat vectors; layers are immutable and shared between copies.
template <typename T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec, std::uint64_t init_seed = 0) : spec_(std::move(spec)) {
    build();
    Rng rng = make_rng(init_seed, 0x494e4954ULL);
    for (const auto& l : layers_) l->initialize(params_.data(), state_.data(), rng);
  }

  const NetworkSpec& spec() const { return spec_; }
  Vec<T>& parameters() { return params_; }
  const Vec<T>& parameters() const { return params_; }
  Vec<T>& state() { return state_; }
  const Vec<T>& state() const { return state_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  const std::vector<GateGroup>& gate_groups() const { return gates_; }
  // Top-level index whose output is the last convolutional (or recurrent)
  // feature map, or -1.
  int feature_layer() const { return feature_layer_; }
  bool has_conv_features() const {
    return feature_layer_ >= 0 && spec_.kind != NetworkKind::classifier_lstm && spec_.is_classifier();
  }

  // Train mode uses batch statistics and updates running statistics.
  Activations<T> forward_train(const Activations<T>& x, Workspace<T>& ws) { return run(x, &ws, true, state_.data()); }

  // Eval mode. Pass a workspace to allow a subsequent backward().
  Activations<T> forward(const Activations<T>& x, Workspace<T>* ws = nullptr) const {
    return run(x, ws, false, nullptr);
  }

  // Back-propagates grad_out (same shape as the last forward output). Parameter
  // gradients are accumulated into param_grad when given; gate gradients into
  // state_grad. Returns the input gradient.
  Mat<T> backward(const Mat<T>& grad_out, const Workspace<T>& ws, T* param_grad, T* state_grad = nullptr,
                  Mat<T>* feature_grad = nullptr) const {
    nn::BackwardContext<T> ctx{params_.data(), state_.data(), param_grad, state_grad};
    Mat<T> g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (feature_grad && static_cast<int>(i) == feature_layer_) *feature_grad = g;
      g = layers_[i]->backward(ctx, g, ws.caches.at(i));
    }
    return g;
  }

  const std::vector<nn::LayerPtr<T>>& layers() const { return layers_; }

  template <typename U>
  Network<U> cast() const {
    Network<U> out(spec_, 0);
    out.parameters() = params_.template cast<U>();
    out.state() = state_.template cast<U>();
    return out;
  }

 private:
  Activations<T> run(const Activations<T>& x, Workspace<T>* ws, bool train, T* state_update) const {
    if (x.channels() != spec_.input_variables)
      throw ShapeError("network expects " + std::to_string(spec_.input_variables) + " variables, got " +
                       std::to_string(x.channels()));
    nn::ForwardContext<T> ctx{params_.data(), state_.data(), state_update, train};
    if (ws) ws->caches.assign(layers_.size(), {});
    Activations<T> a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      a = layers_[i]->forward(ctx, a, ws ? &ws->caches[i] : nullptr);
      if (ws && static_cast<int>(i) == feature_layer_) ws->feature = a;
    }
    return a;
  }

  template <typename L>
  std::shared_ptr<L> place(std::shared_ptr<L> layer) {
    layer->param_offset = param_cursor_;
    layer->state_offset = state_cursor_;
    param_cursor_ += layer->param_count;
    state_cursor_ += layer->state_count;
    return layer;
  }

  void add_activation(std::vector<nn::LayerPtr<T>>& out, ActivationKind a) {
    if (a == ActivationKind::relu)
      out.push_back(place(std::make_shared<nn::Activation<T>>(nn::Activation<T>::Kind::relu)));
    else if (a == ActivationKind::tanh)
      out.push_back(place(std::make_shared<nn::Activation<T>>(nn::Activation<T>::Kind::tanh)));
  }

  void add_gate(Index channels) {
    auto gate = place(std::make_shared<nn::NeuronGate<T>>(channels));
    gates_.push_back({gate->state_offset, channels, layers_.size()});
    layers_.push_back(gate);
    feature_layer_ = static_cast<int>(layers_.size() - 1);
  }

  void build() {
    Index channels = spec_.input_variables;
    bool sequence = true;
    for (const LayerSpec& ls : spec_.layers) {
      switch (ls.op) {
        case LayerOp::conv1d: {
          if (!sequence) throw ConfigError("conv1d after the time axis was reduced");
          layers_.push_back(place(std::make_shared<nn::Conv1d<T>>(channels, ls.channels, ls.kernel_size, ls.dilation,
                                                                  ls.causal)));
          if (ls.batch_norm) layers_.push_back(place(std::make_shared<nn::BatchNorm<T>>(ls.channels)));
          add_activation(layers_, ls.activation);
          channels = ls.channels;
          if (ls.prunable) add_gate(channels);
          break;
        }
        case LayerOp::dense_per_timestep:
        case LayerOp::dense: {
          if (ls.op == LayerOp::dense && sequence) throw ConfigError("dense requires a pooled or recurrent input");
          if (ls.op == LayerOp::dense_per_timestep && !sequence)
            throw ConfigError("dense_per_timestep requires a sequence input");
          layers_.push_back(place(std::make_shared<nn::Dense<T>>(channels, ls.channels)));
          add_activation(layers_, ls.activation);  // softmax is applied outside: the network emits logits
          channels = ls.channels;
          break;
        }
        case LayerOp::recurrent: {
          layers_.push_back(place(std::make_shared<nn::Lstm<T>>(channels, ls.channels)));
          channels = ls.channels;
          sequence = false;
          if (ls.prunable) add_gate(channels);
          break;
        }
        case LayerOp::pooling: {
          layers_.push_back(place(std::make_shared<nn::GlobalAvgPool<T>>()));
          sequence = false;
          break;
        }
        case LayerOp::residual_block: {
          if (ls.kernels.empty()) throw ConfigError("residual_block needs kernels");
          std::vector<nn::LayerPtr<T>> main, shortcut;
          Index c = channels;
          for (std::size_t j = 0; j < ls.kernels.size(); ++j) {
            main.push_back(place(std::make_shared<nn::Conv1d<T>>(c, ls.channels, ls.kernels[j], ls.dilation, ls.causal)));
            if (ls.batch_norm) main.push_back(place(std::make_shared<nn::BatchNorm<T>>(ls.channels)));
            if (j + 1 < ls.kernels.size()) add_activation(main, ActivationKind::relu);
            c = ls.channels;
          }
          if (channels != ls.channels) {
            shortcut.push_back(place(std::make_shared<nn::Conv1d<T>>(channels, ls.channels, 1)));
            if (ls.batch_norm) shortcut.push_back(place(std::make_shared<nn::BatchNorm<T>>(ls.channels)));
          }
          layers_.push_back(std::make_shared<nn::Residual<T>>(std::move(main), std::move(shortcut)));
          add_activation(layers_, ls.activation);
          channels = ls.channels;
          if (ls.prunable) add_gate(channels);
          break;
        }
      }
    }
    if (channels != spec_.output_dim)
      throw ConfigError("network output has " + std::to_string(channels) + " channels, spec declares " +
                        std::to_string(spec_.output_dim));
    params_ = Vec<T>::Zero(static_cast<Index>(param_cursor_));
    state_ = Vec<T>::Zero(static_cast<Index>(state_cursor_));
  }

  NetworkSpec spec_;
  std::vector<nn::LayerPtr<T>> layers_;
  std::vector<GateGroup> gates_;
  int feature_layer_ = -1;
  std::size_t param_cursor_ = 0;
  std::size_t state_cursor_ = 0;
  Vec<T> params_;
  Vec<T> state_;
};

using Model = Network<Real>;

}  // namespace tsba
