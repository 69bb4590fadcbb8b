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

// Wasserstein losses with a hole-masked gradient penalty and a hole-restricted
// L1 reconstruction term.
//
// Masks follow the 1 = valid, 0 = hole convention throughout.

#include <functional>
#include <string>

#include "pano/layers.hpp"

namespace pano {

struct ObjectiveWeights {
  double adversarial = 0.001;     // lambda_1
  double gradient_penalty = 10.0;  // lambda_2
  double l1 = 1.2;                 // lambda_3

  void validate() const;
};

enum class L1Reduction {
  kMean,  // divide by the element count
  kSum,   // plain L1 norm
};

/// -mean(scores) over a [N, 1, 1, 1] score tensor.
template <typename S> Variable<S> generator_adversarial_loss(const Variable<S>& fake_scores);

/// mean(fake) - mean(real); the critic minimises this.
template <typename S> Variable<S> critic_loss(const Variable<S>& real_scores, const Variable<S>& fake_scores);

/// |(1 - m) * (generated - target)|_1 with the chosen reduction. `masks` is
/// [N, 1, H, W] or matches `generated` exactly.
template <typename S>
Variable<S> masked_l1(const Variable<S>& generated, const Tensor<S>& target, const Tensor<S>& masks,
                      L1Reduction reduction = L1Reduction::kMean);

template <typename S>
using CriticFn = std::function<Variable<S>(const Variable<S>&)>;

/// Penalty E[(|grad D(x_hat) * (1 - m)|_2 - 1)^2] on interpolates
/// x_hat = eps * real + (1 - eps) * fake, with one eps per batch item.
///
/// The result is differentiable with respect to whatever parameters `critic`
/// closes over. Interpolates are leaves; `fake` is treated as a constant.
template <typename S>
Variable<S> masked_gradient_penalty(const CriticFn<S>& critic, const Tensor<S>& real, const Tensor<S>& fake,
                                    const Tensor<S>& masks, const Eigen::Array<S, Eigen::Dynamic, 1>& epsilon);

/// As above with eps drawn uniformly from [0, 1] per batch item.
template <typename S>
Variable<S> masked_gradient_penalty(const CriticFn<S>& critic, const Tensor<S>& real, const Tensor<S>& fake,
                                    const Tensor<S>& masks, Rng& rng);

/// Scalar loss components of one training step.
struct LossComponents {
  double g_adv = 0.0;     // generator adversarial term, both critics summed
  double g_l1 = 0.0;      // masked L1
  double d_whole = 0.0;   // whole-critic Wasserstein loss
  double d_slice = 0.0;   // slice-critic Wasserstein loss
  double gp_whole = 0.0;  // whole-critic gradient penalty
  double gp_slice = 0.0;  // slice-critic gradient penalty
};

struct TotalObjective {
  double generator = 0.0;
  double critic_whole = 0.0;
  double critic_slice = 0.0;
};

/// Weighted combination. Throws DivergenceError naming the first non-finite term.
TotalObjective total_objective(const LossComponents& components, const ObjectiveWeights& weights);

/// lambda_1 * adversarial + lambda_3 * l1
template <typename S>
Variable<S> generator_objective(const Variable<S>& adversarial, const Variable<S>& l1, const ObjectiveWeights& weights);

/// wasserstein + lambda_2 * penalty
template <typename S>
Variable<S> critic_objective(const Variable<S>& wasserstein, const Variable<S>& penalty, const ObjectiveWeights& weights);

/// Throws DivergenceError if `value` is not finite.
void require_finite(double value, const std::string& term);

}  // namespace pano
