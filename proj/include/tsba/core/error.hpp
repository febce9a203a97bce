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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsba {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class UnsupportedArchitecture : public Error {
 public:
  using Error::Error;
};

// Raised when a loss turns NaN/Inf during optimisation.
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(const std::string& what, double learning_rate, std::size_t batch)
      : Error(what + " (lr=" + std::to_string(learning_rate) + ", batch=" + std::to_string(batch) + ")"),
        learning_rate_(learning_rate),
        batch_(batch) {}
  double learning_rate() const noexcept { return learning_rate_; }
  std::size_t batch_index() const noexcept { return batch_; }

 private:
  double learning_rate_;
  std::size_t batch_;
};

}  // namespace tsba
