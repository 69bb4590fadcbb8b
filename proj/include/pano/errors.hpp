// Copyright 2026 The pano360 Authors
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

#include <stdexcept>
#include <string>

namespace pano {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (sizes, hyperparameters, file options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (non-binary mask, mismatched shapes, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes incompatible with a network or operator.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite value produced during a numerical computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A loss term diverged during training. `term()` names the offender.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::string term, const std::string& what)
      : NumericalError(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Filesystem or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pano
