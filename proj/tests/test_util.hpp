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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "pano/autograd.hpp"

namespace pano::test {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape);
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = u(rng);
  return t;
}

using ScalarFn = std::function<Variable<double>(const std::vector<Variable<double>>&)>;

/// Largest relative error, per input, between autograd and central differences.
inline std::vector<double> gradient_errors(const ScalarFn& f, const std::vector<Tensor<double>>& inputs,
                                           double h = 1e-6) {
  std::vector<Variable<double>> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  const auto analytic = grad<double>(f(vars), vars);

  std::vector<double> errors;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<double> numeric(inputs[k].shape());
    for (Index i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<Variable<double>> probe;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor<double> t = inputs[j];
          if (j == k) t.array()[i] += delta;
          probe.emplace_back(t, false);
        }
        NoGradGuard no_grad;
        return f(probe).item();
      };
      numeric.array()[i] = (eval(h) - eval(-h)) / (2 * h);
    }
    const auto& a = analytic[k].value().array();
    const double scale = std::max({a.matrix().norm(), numeric.array().matrix().norm(), 1e-8});
    errors.push_back((a - numeric.array()).matrix().norm() / scale);
  }
  return errors;
}

inline void check_gradients(const ScalarFn& f, const std::vector<Tensor<double>>& inputs, double tol = 1e-6) {
  const auto errors = gradient_errors(f, inputs);
  for (std::size_t k = 0; k < errors.size(); ++k) {
    INFO("input " << k);
    CHECK(errors[k] < tol);
  }
}

/// Sum of the output weighted by a fixed random tensor, so every element matters.
inline Variable<double> weighted_sum(const Variable<double>& v, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return sum(mul(v, constant(random_tensor(v.shape(), rng))));
}

}  // namespace pano::test
