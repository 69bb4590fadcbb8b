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

#include "pano/objectives.hpp"

#include <cmath>
#include <sstream>

#include "pano/networks.hpp"

namespace pano {

void ObjectiveWeights::validate() const {
  if (!(adversarial >= 0.0) || !(gradient_penalty >= 0.0) || !(l1 >= 0.0))
    throw ConfigError("objective weights must be non-negative");
}

void require_finite(double value, const std::string& term) {
  if (!std::isfinite(value)) throw DivergenceError(term, "training diverged: " + term + " is " + std::to_string(value));
}

template <typename S>
Variable<S> generator_adversarial_loss(const Variable<S>& fake_scores) {
  if (fake_scores.value().size() == 0) throw ValidationError("adversarial loss of an empty batch");
  return scale(mean(fake_scores), S(-1));
}

template <typename S>
Variable<S> critic_loss(const Variable<S>& real_scores, const Variable<S>& fake_scores) {
  if (real_scores.value().size() == 0) throw ValidationError("critic loss of an empty batch");
  if (real_scores.shape() != fake_scores.shape())
    throw ValidationError("critic loss: real " + to_string(real_scores.shape()) + " vs fake " +
                          to_string(fake_scores.shape()));
  return sub(mean(fake_scores), mean(real_scores));
}

namespace {

template <typename S>
std::shared_ptr<Tensor<S>> hole_weights(const Tensor<S>& masks, const Shape& shape, const char* what) {
  Tensor<S> expanded;
  if (masks.shape() == shape) {
    expanded = masks;
  } else if (masks.shape() == Shape{shape[0], 1, shape[2], shape[3]}) {
    expanded = expand_channels(masks, shape[1]);
  } else {
    throw ValidationError(std::string(what) + ": mask " + to_string(masks.shape()) + " does not fit " + to_string(shape));
  }
  if (((expanded.array() != S(0)) && (expanded.array() != S(1))).any())
    throw ValidationError(std::string(what) + ": mask is not binary");
  return std::make_shared<Tensor<S>>(shape, S(1) - expanded.array());
}

}  // namespace

template <typename S>
Variable<S> masked_l1(const Variable<S>& generated, const Tensor<S>& target, const Tensor<S>& masks,
                      L1Reduction reduction) {
  require_same_shape(generated.shape(), target.shape(), "masked_l1");
  auto weights = hole_weights(masks, target.shape(), "masked_l1");
  Variable<S> diff = mul_const<S>(sub(generated, constant(target)), weights);
  // |d| = d * sign(d); the sign is locally constant.
  auto sign = std::make_shared<Tensor<S>>(target.shape());
  sign->array() = diff.value().array().sign();
  Variable<S> total = sum(mul_const<S>(diff, sign));
  if (reduction == L1Reduction::kSum) return total;
  return scale(total, S(1) / static_cast<S>(target.size()));
}

template <typename S>
Variable<S> masked_gradient_penalty(const CriticFn<S>& critic, const Tensor<S>& real, const Tensor<S>& fake,
                                    const Tensor<S>& masks, const Eigen::Array<S, Eigen::Dynamic, 1>& epsilon) {
  require_same_shape(real.shape(), fake.shape(), "masked_gradient_penalty");
  const Shape shape = real.shape();
  if (epsilon.size() != shape[0]) throw ValidationError("one interpolation coefficient per batch item is required");
  auto weights = hole_weights(masks, shape, "masked_gradient_penalty");

  Tensor<S> interpolated(shape);
  const Index per_item = real.size() / shape[0];
  for (Index n = 0; n < shape[0]; ++n) {
    const S e = epsilon[n];
    interpolated.array().segment(n * per_item, per_item) =
        e * real.array().segment(n * per_item, per_item) + (S(1) - e) * fake.array().segment(n * per_item, per_item);
  }
  const Variable<S> x_hat(std::move(interpolated), true);
  const Variable<S> scores = critic(x_hat);
  const std::vector<Variable<S>> wrt{x_hat};
  const Variable<S> gradient = grad<S>(sum(scores), wrt, /*create_graph=*/true)[0];
  if (!gradient.value().array().isFinite().all()) {
    std::ostringstream msg;
    msg << "gradient penalty: critic gradient is not finite at the interpolates (" << (!gradient.value().array().isFinite()).count()
        << " of " << gradient.value().size() << " entries, score range [" << scores.value().array().minCoeff() << ", "
        << scores.value().array().maxCoeff() << "])";
    throw NumericalError(msg.str());
  }
  const Variable<S> norms = sqrt(sample_sum(square(mul_const<S>(gradient, weights))));
  return mean(square(add_scalar(norms, S(-1))));
}

template <typename S>
Variable<S> masked_gradient_penalty(const CriticFn<S>& critic, const Tensor<S>& real, const Tensor<S>& fake,
                                    const Tensor<S>& masks, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::Array<S, Eigen::Dynamic, 1> epsilon(real.dim(0));
  for (Index n = 0; n < epsilon.size(); ++n) epsilon[n] = static_cast<S>(uniform(rng));
  return masked_gradient_penalty(critic, real, fake, masks, epsilon);
}

TotalObjective total_objective(const LossComponents& c, const ObjectiveWeights& w) {
  require_finite(c.g_adv, "g_adv");
  require_finite(c.g_l1, "g_l1");
  require_finite(c.d_whole, "d_whole");
  require_finite(c.d_slice, "d_slice");
  require_finite(c.gp_whole, "gp_whole");
  require_finite(c.gp_slice, "gp_slice");
  TotalObjective total;
  total.generator = w.adversarial * c.g_adv + w.l1 * c.g_l1;
  total.critic_whole = c.d_whole + w.gradient_penalty * c.gp_whole;
  total.critic_slice = c.d_slice + w.gradient_penalty * c.gp_slice;
  return total;
}

template <typename S>
Variable<S> generator_objective(const Variable<S>& adversarial, const Variable<S>& l1, const ObjectiveWeights& weights) {
  return add(scale(adversarial, static_cast<S>(weights.adversarial)), scale(l1, static_cast<S>(weights.l1)));
}

template <typename S>
Variable<S> critic_objective(const Variable<S>& wasserstein, const Variable<S>& penalty, const ObjectiveWeights& weights) {
  return add(wasserstein, scale(penalty, static_cast<S>(weights.gradient_penalty)));
}

#define PANO_INSTANTIATE(S)                                                                                           \
  template Variable<S> generator_adversarial_loss(const Variable<S>&);                                               \
  template Variable<S> critic_loss(const Variable<S>&, const Variable<S>&);                                          \
  template Variable<S> masked_l1(const Variable<S>&, const Tensor<S>&, const Tensor<S>&, L1Reduction);               \
  template Variable<S> masked_gradient_penalty(const CriticFn<S>&, const Tensor<S>&, const Tensor<S>&,               \
                                               const Tensor<S>&, const Eigen::Array<S, Eigen::Dynamic, 1>&);         \
  template Variable<S> masked_gradient_penalty(const CriticFn<S>&, const Tensor<S>&, const Tensor<S>&,               \
                                               const Tensor<S>&, Rng&);                                              \
  template Variable<S> generator_objective(const Variable<S>&, const Variable<S>&, const ObjectiveWeights&);         \
  template Variable<S> critic_objective(const Variable<S>&, const Variable<S>&, const ObjectiveWeights&);

PANO_INSTANTIATE(float)
PANO_INSTANTIATE(double)

#undef PANO_INSTANTIATE

}  // namespace pano
