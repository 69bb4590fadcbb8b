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

#include <vector>

#include "pano/layers.hpp"

namespace pano {

/// Adaptive-moment gradient descent over a fixed parameter list.
template <typename S>
class Adam {
 public:
  struct Options {
    double learning_rate = 4e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double epsilon = 1e-8;
  };

  Adam(std::vector<NamedParameter<S>> params, Options options);

  /// Applies one update; `grads[i]` pairs with `parameters()[i]`.
  void step(const std::vector<Variable<S>>& grads);

  const std::vector<NamedParameter<S>>& parameters() const { return params_; }
  std::vector<Variable<S>> variables() const;
  const Options& options() const { return options_; }
  std::int64_t steps() const { return steps_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<Tensor<S>>& first_moments() { return m_; }
  std::vector<Tensor<S>>& second_moments() { return v_; }
  void set_steps(std::int64_t steps) { steps_ = steps; }

 private:
  std::vector<NamedParameter<S>> params_;
  Options options_;
  std::vector<Tensor<S>> m_;
  std::vector<Tensor<S>> v_;
  std::int64_t steps_ = 0;
};

}  // namespace pano
