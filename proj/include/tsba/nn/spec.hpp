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

#include "tsba/core/error.hpp"
#include "tsba/core/hash.hpp"
#include "tsba/core/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace tsba {

enum class NetworkKind {
  classifier_fcn,
  classifier_tcn,
  classifier_resnet,
  classifier_lstm,
  trigger_generator,
  universal_generator,
};

enum class LayerOp { conv1d, dense_per_timestep, dense, recurrent, pooling, residual_block };

enum class ActivationKind { none, relu, tanh, softmax };

NLOHMANN_JSON_SERIALIZE_ENUM(NetworkKind, {
                                              {NetworkKind::classifier_fcn, "classifier_fcn"},
                                              {NetworkKind::classifier_tcn, "classifier_tcn"},
                                              {NetworkKind::classifier_resnet, "classifier_resnet"},
                                              {NetworkKind::classifier_lstm, "classifier_lstm"},
                                              {NetworkKind::trigger_generator, "trigger_generator"},
                                              {NetworkKind::universal_generator, "universal_generator"},
                                          })

NLOHMANN_JSON_SERIALIZE_ENUM(LayerOp, {
                                          {LayerOp::conv1d, "conv1d"},
                                          {LayerOp::dense_per_timestep, "dense_per_timestep"},
                                          {LayerOp::dense, "dense"},
                                          {LayerOp::recurrent, "recurrent"},
                                          {LayerOp::pooling, "pooling"},
                                          {LayerOp::residual_block, "residual_block"},
                                      })

NLOHMANN_JSON_SERIALIZE_ENUM(ActivationKind, {
                                                 {ActivationKind::none, "none"},
                                                 {ActivationKind::relu, "relu"},
                                                 {ActivationKind::tanh, "tanh"},
                                                 {ActivationKind::softmax, "softmax"},
                                             })

struct LayerSpec {
  LayerOp op = LayerOp::conv1d;
  Index kernel_size = 1;
  Index channels = 0;
  Index dilation = 1;
  bool causal = false;
  bool batch_norm = false;
  ActivationKind activation = ActivationKind::none;
  // Output neurons exposed to pruning defenses through a per-channel gate.
  bool prunable = false;
  // residual_block only: one conv per entry.
  std::vector<Index> kernels;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LayerSpec, op, kernel_size, channels, dilation, causal, batch_norm, activation,
                                   prunable, kernels)

struct NetworkSpec {
  NetworkKind kind = NetworkKind::classifier_fcn;
  Index input_length = 0;  // 0 for length-agnostic networks
  Index input_variables = 1;
  Index output_dim = 0;
  std::vector<LayerSpec> layers;

  bool is_classifier() const {
    return kind != NetworkKind::trigger_generator && kind != NetworkKind::universal_generator;
  }
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(NetworkSpec, kind, input_length, input_variables, output_dim, layers)

inline constexpr int kSpecVersion = 1;

inline std::string spec_hash(const NetworkSpec& spec) {
  nlohmann::json j = spec;
  j["spec_version"] = kSpecVersion;
  return hex64(Fnv1a().update(j.dump()).digest());
}

inline std::string to_string(NetworkKind k) { return nlohmann::json(k).get<std::string>(); }

}  // namespace tsba
