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

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tsba {

struct FoldSplit {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;  // sample_id -> fold

  // Indices into the dataset for (train, test) of the given fold.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> indices(const Dataset& ds, int fold) const {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      (assignments.at(ds.samples[i].sample_id) == fold ? test : train).push_back(i);
    }
    return {std::move(train), std::move(test)};
  }
};

// Stratified assignment: each class is shuffled and dealt round-robin, the
// dealing position carrying over between classes so fold sizes stay balanced.
inline FoldSplit stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (static_cast<std::size_t>(k) > ds.samples.size())
    throw ConfigError("k=" + std::to_string(k) + " exceeds dataset size " + std::to_string(ds.samples.size()));
  FoldSplit split;
  split.k = k;
  split.seed = seed;
  Rng rng = make_rng(seed, 0x4b464f4c44ULL);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    by_class.at(static_cast<std::size_t>(ds.samples[i].label)).push_back(i);
  int cursor = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) {
      if (!split.assignments.emplace(ds.samples[i].sample_id, cursor).second)
        throw ConfigError("duplicate sample_id '" + ds.samples[i].sample_id + "'");
      cursor = (cursor + 1) % k;
    }
  }
  return split;
}

// Seeded stratified holdout: returns (rest, held) index lists with about
// fraction of each class held out (at least one sample per class when the
// class has two or more).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(const Dataset& ds,
                                                                                         double fraction,
                                                                                         std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x484f4c44ULL);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    by_class.at(static_cast<std::size_t>(ds.samples[i].label)).push_back(i);
  std::vector<std::size_t> rest, held;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (n_held == 0 && members.size() >= 2 && fraction > 0) n_held = 1;
    for (std::size_t j = 0; j < members.size(); ++j) (j < n_held ? held : rest).push_back(members[j]);
  }
  std::sort(rest.begin(), rest.end());
  std::sort(held.begin(), held.end());
  return {std::move(rest), std::move(held)};
}

}  // namespace tsba
