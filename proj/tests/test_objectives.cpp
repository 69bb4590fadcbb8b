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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include "pano/networks.hpp"
#include "pano/objectives.hpp"

using namespace pano;
using namespace pano::test;

namespace {

std::mt19937_64 rng(77);

Tensor<double> random_mask(Shape shape, std::mt19937_64& r, double hole_fraction = 0.4) {
  std::bernoulli_distribution hole(hole_fraction);
  Tensor<double> m(shape);
  for (Index i = 0; i < m.size(); ++i) m.array()[i] = hole(r) ? 0.0 : 1.0;
  return m;
}

// D(x) = sum(a * x) + b per batch item.
CriticFn<double> linear_critic(const Tensor<double>& a, double b) {
  auto weights = std::make_shared<const Tensor<double>>(a);
  return [weights, b](const Variable<double>& x) {
    const Shape s = x.shape();
    Tensor<double> tiled(s);
    const Index per = weights->size();
    for (Index n = 0; n < s[0]; ++n) tiled.array().segment(n * per, per) = weights->array();
    return add_scalar(sample_sum(mul_const(x, std::make_shared<const Tensor<double>>(tiled))), b);
  };
}

}  // namespace

TEST_CASE("adversarial and critic losses") {
  Tensor<double> real(Shape{4, 1, 1, 1});
  Tensor<double> fake(Shape{4, 1, 1, 1});
  real.array() << 1.0, 2.0, 3.0, 4.0;
  fake.array() << -1.0, 0.5, 0.0, 0.5;
  CHECK(generator_adversarial_loss(constant(fake)).item() == doctest::Approx(0.0));
  CHECK(critic_loss(constant(real), constant(fake)).item() == doctest::Approx(0.0 - 2.5));
  CHECK_THROWS_AS(critic_loss(constant(real), constant(Tensor<double>(Shape{3, 1, 1, 1}))), ValidationError);

  const auto r = random_tensor({5, 1, 1, 1}, rng);
  const auto f = random_tensor({5, 1, 1, 1}, rng);
  check_gradients([](const auto& v) { return generator_adversarial_loss(v[0]); }, {f});
  check_gradients([](const auto& v) { return critic_loss(v[0], v[1]); }, {r, f});
}

TEST_CASE("masked L1") {
  const auto gen = random_tensor({2, 3, 8, 8}, rng);
  const auto target = random_tensor({2, 3, 8, 8}, rng);
  const Tensor<double> valid(Shape{2, 1, 8, 8}, 1.0);
  CHECK(masked_l1(constant(gen), target, valid).item() == 0.0);
  CHECK(masked_l1(constant(gen), target, valid, L1Reduction::kSum).item() == 0.0);

  const auto mask = random_mask({2, 1, 8, 8}, rng);
  double expected = 0.0;
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < 8; ++y)
        for (Index x = 0; x < 8; ++x)
          expected += (1.0 - mask(n, 0, y, x)) * std::abs(gen(n, c, y, x) - target(n, c, y, x));
  CHECK(masked_l1(constant(gen), target, mask, L1Reduction::kSum).item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(masked_l1(constant(gen), target, mask).item() == doctest::Approx(expected / gen.size()).epsilon(1e-12));

  check_gradients([&](const auto& v) { return masked_l1(v[0], target, mask); }, {gen});

  Tensor<double> soft = mask;
  soft.array()[0] = 0.5;
  CHECK_THROWS_AS(masked_l1(constant(gen), target, soft), ValidationError);
  CHECK_THROWS_AS(masked_l1(constant(gen), random_tensor({2, 3, 4, 4}, rng), mask), ValidationError);
}

TEST_CASE("gradient penalty of a linear critic has a closed form") {
  const Shape s{3, 3, 8, 8};
  const auto a = random_tensor({1, 3, 8, 8}, rng);
  const auto real = random_tensor(s, rng);
  const auto fake = random_tensor(s, rng);
  const auto mask = random_mask({3, 1, 8, 8}, rng);
  Eigen::ArrayXd eps(3);
  eps << 0.1, 0.5, 0.9;
  const double gp = masked_gradient_penalty(linear_critic(a, 0.7), real, fake, mask, eps).item();

  double expected = 0.0;
  for (Index n = 0; n < 3; ++n) {
    double sq = 0.0;
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < 8; ++y)
        for (Index x = 0; x < 8; ++x) sq += std::pow(a(0, c, y, x) * (1.0 - mask(n, 0, y, x)), 2);
    expected += std::pow(std::sqrt(sq) - 1.0, 2) / 3.0;
  }
  CHECK(std::abs(gp - expected) < 1e-9);

  // An all-valid mask removes the gradient entirely: (0 - 1)^2.
  const Tensor<double> valid(Shape{3, 1, 8, 8}, 1.0);
  CHECK(masked_gradient_penalty(linear_critic(a, 0.0), real, fake, valid, eps).item() == 1.0);
}

TEST_CASE("gradient penalty interpolates per batch item") {
  // D(x) = sum(x^2) has gradient 2 x_hat, so the penalty depends on eps.
  const CriticFn<double> quadratic = [](const Variable<double>& x) { return sample_sum(square(x)); };
  const auto real = random_tensor({2, 1, 2, 2}, rng);
  const auto fake = random_tensor({2, 1, 2, 2}, rng);
  const Tensor<double> holes(Shape{2, 1, 2, 2}, 0.0);
  Eigen::ArrayXd eps(2);
  eps << 0.25, 1.0;
  double expected = 0.0;
  for (Index n = 0; n < 2; ++n) {
    double sq = 0.0;
    for (Index i = 0; i < 4; ++i) {
      const double xh = eps[n] * real.array()[n * 4 + i] + (1 - eps[n]) * fake.array()[n * 4 + i];
      sq += 4 * xh * xh;
    }
    expected += std::pow(std::sqrt(sq) - 1.0, 2) / 2.0;
  }
  CHECK(masked_gradient_penalty(quadratic, real, fake, holes, eps).item() == doctest::Approx(expected).epsilon(1e-12));
  Eigen::ArrayXd wrong(3);
  CHECK_THROWS_AS(masked_gradient_penalty(quadratic, real, fake, holes, wrong), ValidationError);

  Rng r1(5), r2(5);
  CHECK(masked_gradient_penalty(quadratic, real, fake, holes, r1).item() ==
        masked_gradient_penalty(quadratic, real, fake, holes, r2).item());
}

TEST_CASE("gradient penalty gradients with respect to critic weights") {
  // Critic: conv -> leaky relu -> linear, on random 8 x 8 inputs.
  const auto real = random_tensor({2, 2, 8, 8}, rng);
  const auto fake = random_tensor({2, 2, 8, 8}, rng);
  const auto mask = random_mask({2, 1, 8, 8}, rng);
  const auto w = random_tensor({3, 2, 4, 4}, rng, -0.3, 0.3);
  const auto head = random_tensor({1, 48, 1, 1}, rng, -0.3, 0.3);
  Eigen::ArrayXd eps(2);
  eps << 0.3, 0.8;
  const ScalarFn f = [&](const std::vector<Variable<double>>& v) {
    GradModeGuard enable(true);
    const Variable<double> wv = v[0], hv = v[1];
    const CriticFn<double> critic = [wv, hv](const Variable<double>& x) {
      const auto h = leaky_relu(conv2d(x, wv, ConvGeometry{}), 0.2);
      return matmul(reshape(h, Shape{x.shape()[0], 48, 1, 1}), hv, false, true);
    };
    return masked_gradient_penalty(critic, real, fake, mask, eps);
  };
  const auto errors = gradient_errors(f, {w, head});
  for (double e : errors) CHECK(e < 1e-3);
}

TEST_CASE("generator and critic objectives") {
  const ObjectiveWeights w;
  CHECK(w.adversarial == 0.001);
  CHECK(w.gradient_penalty == 10.0);
  CHECK(w.l1 == 1.2);
  Tensor<double> one(Shape{1, 1, 1, 1}, 2.0), two(Shape{1, 1, 1, 1}, 3.0);
  CHECK(generator_objective(constant(one), constant(two), w).item() == doctest::Approx(0.001 * 2 + 1.2 * 3));
  CHECK(critic_objective(constant(one), constant(two), w).item() == doctest::Approx(2 + 10.0 * 3));

  LossComponents c{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const TotalObjective t = total_objective(c, w);
  CHECK(t.generator == doctest::Approx(0.001 + 2.4));
  CHECK(t.critic_whole == doctest::Approx(53.0));
  CHECK(t.critic_slice == doctest::Approx(64.0));
  c.gp_slice = std::numeric_limits<double>::quiet_NaN();
  try {
    total_objective(c, w);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.term() == "gp_slice");
  }
  CHECK_THROWS_AS((ObjectiveWeights{-1.0, 10.0, 1.2}.validate()), ConfigError);
}

TEST_CASE("non-finite critic gradients are reported") {
  const CriticFn<double> bad = [](const Variable<double>& x) {
    return sample_sum(mul_const(x, std::make_shared<const Tensor<double>>(
                                       x.shape(), Eigen::ArrayXd::Constant(x.value().size(), INFINITY))));
  };
  const auto real = random_tensor({1, 1, 2, 2}, rng);
  const Tensor<double> holes(Shape{1, 1, 2, 2}, 0.0);
  Eigen::ArrayXd eps(1);
  eps << 0.5;
  CHECK_THROWS_AS(masked_gradient_penalty(bad, real, real, holes, eps), NumericalError);
}
