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

#include "pano/optim.hpp"

#include <cmath>

namespace pano {

template <typename S>
Adam<S>::Adam(std::vector<NamedParameter<S>> params, Options options) : params_(std::move(params)), options_(options) {
  if (!(options_.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  for (const auto& p : params_) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

template <typename S>
std::vector<Variable<S>> Adam<S>::variables() const {
  std::vector<Variable<S>> out;
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

template <typename S>
void Adam<S>::step(const std::vector<Variable<S>>& grads) {
  if (grads.size() != params_.size()) throw PreconditionError("one gradient per parameter is required");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const auto lr = static_cast<S>(options_.learning_rate);
  const auto b1 = static_cast<S>(options_.beta1);
  const auto b2 = static_cast<S>(options_.beta2);
  const auto c1 = static_cast<S>(1.0 - std::pow(options_.beta1, t));
  const auto c2 = static_cast<S>(1.0 - std::pow(options_.beta2, t));
  const auto eps = static_cast<S>(options_.epsilon);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = grads[i].value().array();
    auto& m = m_[i].array();
    auto& v = v_[i].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    Variable<S> p = params_[i].value;
    p.mutable_value().array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace pano
