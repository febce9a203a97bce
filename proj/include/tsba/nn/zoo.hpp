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

#include "tsba/nn/network.hpp"

#include <cmath>
#include <string>

namespace tsba {

enum class ClassifierArch { fcn, tcn, resnet, lstm };

inline ClassifierArch parse_arch(const std::string& name) {
  if (name == "fcn") return ClassifierArch::fcn;
  if (name == "tcn") return ClassifierArch::tcn;
  if (name == "resnet") return ClassifierArch::resnet;
  if (name == "lstm") return ClassifierArch::lstm;
  throw ConfigError("unknown classifier architecture '" + name + "'");
}

inline std::string to_string(ClassifierArch a) {
  switch (a) {
    case ClassifierArch::fcn: return "fcn";
    case ClassifierArch::tcn: return "tcn";
    case ClassifierArch::resnet: return "resnet";
    case ClassifierArch::lstm: return "lstm";
  }
  return "?";
}

namespace detail {
inline Index scaled(Index channels, double width) {
  return std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(channels) * width)));
}
}  // namespace detail

// width scales every channel count; 1.0 gives the reference sizes.
inline NetworkSpec classifier_spec(ClassifierArch arch, Index length, Index variables, int classes,
                                   double width = 1.0) {
  if (classes < 2) throw ConfigError("classifier needs at least 2 classes");
  NetworkSpec s;
  s.input_length = length;
  s.input_variables = variables;
  s.output_dim = classes;
  auto w = [&](Index c) { return detail::scaled(c, width); };
  switch (arch) {
    case ClassifierArch::fcn:
      s.kind = NetworkKind::classifier_fcn;
      for (auto [k, c] : {std::pair<Index, Index>{8, 128}, {5, 256}, {3, 128}}) {
        LayerSpec l;
        l.op = LayerOp::conv1d;
        l.kernel_size = k;
        l.channels = w(c);
        l.batch_norm = true;
        l.activation = ActivationKind::relu;
        l.prunable = true;
        s.layers.push_back(l);
      }
      break;
    case ClassifierArch::resnet:
      s.kind = NetworkKind::classifier_resnet;
      for (Index c : {64, 128, 128}) {
        LayerSpec l;
        l.op = LayerOp::residual_block;
        l.kernels = {8, 5, 3};
        l.channels = w(c);
        l.batch_norm = true;
        l.activation = ActivationKind::relu;
        l.prunable = true;
        s.layers.push_back(l);
      }
      break;
    case ClassifierArch::tcn:
      s.kind = NetworkKind::classifier_tcn;
      for (Index d : {1, 2, 4, 8}) {
        LayerSpec l;
        l.op = LayerOp::residual_block;
        l.kernels = {3, 3};
        l.dilation = d;
        l.causal = true;
        l.channels = w(64);
        l.activation = ActivationKind::relu;
        l.prunable = true;
        s.layers.push_back(l);
      }
      break;
    case ClassifierArch::lstm: {
      s.kind = NetworkKind::classifier_lstm;
      LayerSpec l;
      l.op = LayerOp::recurrent;
      l.channels = w(128);
      l.prunable = true;
      s.layers.push_back(l);
      break;
    }
  }
  if (arch != ClassifierArch::lstm) {
    LayerSpec pool;
    pool.op = LayerOp::pooling;
    s.layers.push_back(pool);
  }
  LayerSpec head;
  head.op = LayerOp::dense;
  head.channels = classes;
  head.activation = ActivationKind::softmax;
  s.layers.push_back(head);
  return s;
}

// Conv(15, 128D) -> Conv(21, 512D) -> per-timestep FC(256D) -> per-timestep FC(D, tanh).
inline NetworkSpec trigger_generator_spec(Index length, Index variables, double width = 1.0) {
  if (length < 1 || variables < 1) throw ConfigError("generator needs L, D >= 1");
  NetworkSpec s;
  s.kind = NetworkKind::trigger_generator;
  s.input_length = length;
  s.input_variables = variables;
  s.output_dim = variables;
  auto w = [&](Index c) { return detail::scaled(c * variables, width); };
  s.layers = {
      LayerSpec{.op = LayerOp::conv1d, .kernel_size = 15, .channels = w(128), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::conv1d, .kernel_size = 21, .channels = w(512), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::dense_per_timestep, .channels = w(256), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::dense_per_timestep, .channels = variables, .activation = ActivationKind::tanh},
  };
  return s;
}

// Adds Conv(8, 1024D) and widens the first FC to 512D. Length agnostic.
inline NetworkSpec universal_generator_spec(Index variables, double width = 1.0) {
  if (variables < 1) throw ConfigError("generator needs D >= 1");
  NetworkSpec s;
  s.kind = NetworkKind::universal_generator;
  s.input_length = 0;
  s.input_variables = variables;
  s.output_dim = variables;
  auto w = [&](Index c) { return detail::scaled(c * variables, width); };
  s.layers = {
      LayerSpec{.op = LayerOp::conv1d, .kernel_size = 15, .channels = w(128), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::conv1d, .kernel_size = 21, .channels = w(512), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::conv1d, .kernel_size = 8, .channels = w(1024), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::dense_per_timestep, .channels = w(512), .activation = ActivationKind::relu},
      LayerSpec{.op = LayerOp::dense_per_timestep, .channels = variables, .activation = ActivationKind::tanh},
  };
  return s;
}

template <typename T = Real>
Network<T> build_classifier(ClassifierArch arch, Index length, Index variables, int classes, std::uint64_t seed = 0,
                            double width = 1.0) {
  return Network<T>(classifier_spec(arch, length, variables, classes, width), seed);
}

template <typename T = Real>
Network<T> build_trigger_generator(Index length, Index variables, std::uint64_t seed = 0, double width = 1.0) {
  return Network<T>(trigger_generator_spec(length, variables, width), seed);
}

template <typename T = Real>
Network<T> build_universal_generator(Index variables, std::uint64_t seed = 0, double width = 1.0) {
  return Network<T>(universal_generator_spec(variables, width), seed);
}

// Zeroes the weights and bias of the last parameterised layer.
template <typename T>
void zero_final_layer(Network<T>& net) {
  for (auto it = net.layers().rbegin(); it != net.layers().rend(); ++it) {
    if ((*it)->param_count > 0) {
      net.parameters().segment(static_cast<Index>((*it)->param_offset), static_cast<Index>((*it)->param_count)).setZero();
      return;
    }
  }
}

}  // namespace tsba
