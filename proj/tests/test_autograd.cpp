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

using namespace pano;
using namespace pano::test;

namespace {

std::mt19937_64 rng(2024);

// Direct-loop convolution, the reference for the im2col path.
Tensor<double> conv_reference(const Tensor<double>& x, const Tensor<double>& w, const ConvGeometry& g) {
  const auto [n, ci, h, wd] = x.shape();
  const Index co = w.dim(0);
  const Index oh = g.output_extent(h);
  const Index ow = g.output_extent(wd);
  Tensor<double> y(Shape{n, co, oh, ow});
  for (Index b = 0; b < n; ++b)
    for (Index o = 0; o < co; ++o)
      for (Index oy = 0; oy < oh; ++oy)
        for (Index ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (Index c = 0; c < ci; ++c)
            for (Index ky = 0; ky < g.kernel; ++ky)
              for (Index kx = 0; kx < g.kernel; ++kx) {
                const Index iy = oy * g.stride - g.padding + ky;
                const Index ix = ox * g.stride - g.padding + kx;
                if (iy >= 0 && iy < h && ix >= 0 && ix < wd) acc += x(b, c, iy, ix) * w(o, c, ky, kx);
              }
          y(b, o, oy, ox) = acc;
        }
  return y;
}

}  // namespace

TEST_CASE("elementwise gradients") {
  const Shape s{2, 3, 2, 2};
  const auto a = random_tensor(s, rng);
  const auto b = random_tensor(s, rng);
  check_gradients([](const auto& v) { return weighted_sum(add(v[0], v[1])); }, {a, b});
  check_gradients([](const auto& v) { return weighted_sum(sub(v[0], v[1])); }, {a, b});
  check_gradients([](const auto& v) { return weighted_sum(mul(v[0], v[1])); }, {a, b});
  check_gradients([](const auto& v) { return weighted_sum(scale(v[0], 2.5)); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(add_scalar(v[0], -0.3)); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(square(v[0])); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(tanh(v[0])); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(leaky_relu(v[0], 0.2)); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(relu(v[0])); }, {a});
  const auto positive = random_tensor(s, rng, 0.5, 2.0);
  check_gradients([](const auto& v) { return weighted_sum(rsqrt(v[0], 1e-5)); }, {positive});
  check_gradients([](const auto& v) { return weighted_sum(sqrt(v[0])); }, {positive});
  auto factor = std::make_shared<const Tensor<double>>(random_tensor(s, rng));
  check_gradients([factor](const auto& v) { return weighted_sum(mul_const(v[0], factor)); }, {a});
}

TEST_CASE("reductions and broadcasts") {
  const auto a = random_tensor({2, 3, 4, 5}, rng);
  check_gradients([](const auto& v) { return square(sum(v[0])); }, {a});
  check_gradients([](const auto& v) { return square(mean(v[0])); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(channel_sum(v[0])); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(sample_sum(v[0])); }, {a});
  const auto c = random_tensor({1, 3, 1, 1}, rng);
  check_gradients([](const auto& v) { return weighted_sum(broadcast_channel(v[0], Shape{2, 3, 4, 5})); }, {c});
  const auto n = random_tensor({2, 1, 1, 1}, rng);
  check_gradients([](const auto& v) { return weighted_sum(broadcast_sample(v[0], Shape{2, 3, 4, 5})); }, {n});
  const auto one = random_tensor({1, 1, 1, 1}, rng);
  check_gradients([](const auto& v) { return weighted_sum(broadcast_all(v[0], Shape{2, 3, 4, 5})); }, {one});

  Variable<double> x(a, false);
  CHECK(sum(x).item() == doctest::Approx(a.array().sum()));
  CHECK(channel_sum(x).shape() == Shape{1, 3, 1, 1});
  CHECK(sample_sum(x).shape() == Shape{2, 1, 1, 1});
}

TEST_CASE("layout operations") {
  const auto a = random_tensor({2, 3, 2, 2}, rng);
  const auto b = random_tensor({2, 1, 2, 2}, rng);
  const auto c = random_tensor({1, 3, 2, 2}, rng);
  check_gradients([](const auto& v) { return weighted_sum(reshape(v[0], Shape{3, 2, 4, 1})); }, {a});
  check_gradients(
      [](const auto& v) {
        const std::vector<Variable<double>> parts{v[0], v[1]};
        return weighted_sum(concat<double>(parts, 1));
      },
      {a, b});
  check_gradients(
      [](const auto& v) {
        const std::vector<Variable<double>> parts{v[0], v[1]};
        return weighted_sum(concat<double>(parts, 0));
      },
      {a, c});
  check_gradients([](const auto& v) { return weighted_sum(slice(v[0], 1, 1, 2)); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(slice(v[0], 0, 1, 1)); }, {a});
  check_gradients([](const auto& v) { return weighted_sum(embed(v[0], 1, 5, 2)); }, {a});

  const Variable<double> x(a, false);
  const auto s = slice(x, 1, 1, 2).value();
  CHECK(s(1, 0, 1, 0) == a(1, 1, 1, 0));
  const auto e = embed(x, 0, 4, 1).value();
  CHECK(e(0, 0, 0, 0) == 0.0);
  CHECK(e(2, 1, 1, 1) == a(1, 1, 1, 1));
}

TEST_CASE("matmul in all transpose combinations") {
  const auto a = random_tensor({3, 4, 1, 1}, rng);
  const auto b = random_tensor({4, 2, 1, 1}, rng);
  const auto at = random_tensor({4, 3, 1, 1}, rng);
  const auto bt = random_tensor({2, 4, 1, 1}, rng);
  check_gradients([](const auto& v) { return weighted_sum(matmul(v[0], v[1], false, false)); }, {a, b});
  check_gradients([](const auto& v) { return weighted_sum(matmul(v[0], v[1], true, false)); }, {at, b});
  check_gradients([](const auto& v) { return weighted_sum(matmul(v[0], v[1], false, true)); }, {a, bt});
  check_gradients([](const auto& v) { return weighted_sum(matmul(v[0], v[1], true, true)); }, {at, bt});

  const Variable<double> x(a, false), y(b, false);
  const auto p = matmul(x, y, false, false).value();
  CHECK(p.shape() == Shape{3, 2, 1, 1});
  double expected = 0.0;
  for (Index k = 0; k < 4; ++k) expected += a(2, k, 0, 0) * b(k, 1, 0, 0);
  CHECK(p(2, 1, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("conv2d matches a direct loop") {
  const ConvGeometry g;
  for (Index size : {4, 6, 8}) {
    const auto x = random_tensor({2, 3, size, size}, rng);
    const auto w = random_tensor({5, 3, 4, 4}, rng);
    const auto y = conv2d(Variable<double>(x), Variable<double>(w), g).value();
    const auto ref = conv_reference(x, w, g);
    REQUIRE(y.shape() == ref.shape());
    CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);
  }
  const ConvGeometry g3{3, 1, 1};
  const auto x = random_tensor({1, 2, 5, 5}, rng);
  const auto w = random_tensor({2, 2, 3, 3}, rng);
  CHECK((conv2d(Variable<double>(x), Variable<double>(w), g3).value().array() - conv_reference(x, w, g3).array())
            .abs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("conv2d_transpose and conv2d_weight are adjoints of conv2d") {
  const ConvGeometry g;
  const auto x = random_tensor({2, 3, 8, 8}, rng);
  const auto w = random_tensor({4, 3, 4, 4}, rng);
  const auto dy = random_tensor({2, 4, 4, 4}, rng);
  const auto y = conv2d(Variable<double>(x), Variable<double>(w), g).value();
  const auto xt = conv2d_transpose(Variable<double>(dy), Variable<double>(w), g, 8, 8).value();
  const auto wt = conv2d_weight(Variable<double>(x), Variable<double>(dy), g).value();
  const double lhs = (y.array() * dy.array()).sum();
  CHECK((x.array() * xt.array()).sum() == doctest::Approx(lhs).epsilon(1e-12));
  CHECK((w.array() * wt.array()).sum() == doctest::Approx(lhs).epsilon(1e-12));
}

TEST_CASE("convolution gradients") {
  const ConvGeometry g;
  const auto x = random_tensor({2, 2, 6, 6}, rng);
  const auto w = random_tensor({3, 2, 4, 4}, rng);
  const auto dy = random_tensor({2, 3, 3, 3}, rng);
  check_gradients([g](const auto& v) { return weighted_sum(conv2d(v[0], v[1], g)); }, {x, w});
  check_gradients([g](const auto& v) { return weighted_sum(conv2d_transpose(v[0], v[1], g, 6, 6)); }, {dy, w});
  check_gradients([g](const auto& v) { return weighted_sum(conv2d_weight(v[0], v[1], g)); }, {x, dy});
}

TEST_CASE("gradients of gradients") {
  const ConvGeometry g;
  const auto x = random_tensor({2, 2, 4, 4}, rng);
  const auto w = random_tensor({3, 2, 4, 4}, rng, -0.5, 0.5);
  // Penalty-style objective: squared norm of d/dx of a small network.
  const ScalarFn f = [g](const std::vector<Variable<double>>& v) {
    GradModeGuard enable(true);
    Variable<double> xi(v[0].value(), true);
    const Variable<double> out = sum(tanh(leaky_relu(conv2d(xi, v[1], g), 0.2)));
    const std::vector<Variable<double>> wrt{xi};
    const auto dx = grad<double>(out, wrt, true)[0];
    return sum(square(dx));
  };
  const auto errors = gradient_errors(f, {x, w});
  CHECK(errors[1] < 1e-6);
}

TEST_CASE("grad mode and unrelated inputs") {
  const auto a = random_tensor({1, 2, 2, 2}, rng);
  Variable<double> x(a, true);
  Variable<double> unrelated(a, true);
  {
    NoGradGuard no_grad;
    CHECK_FALSE(grad_enabled());
    CHECK_FALSE(square(x).requires_grad());
  }
  CHECK(grad_enabled());
  const std::vector<Variable<double>> wrt{x, unrelated};
  const auto g = grad<double>(sum(square(x)), wrt);
  CHECK(((g[0].value().array() - 2.0 * a.array()).abs() < 1e-15).all());
  CHECK((g[1].value().array() == 0.0).all());
}

TEST_CASE("sqrt has zero derivative at zero") {
  Variable<double> z(Tensor<double>(Shape{1, 1, 1, 3}), true);
  const std::vector<Variable<double>> wrt{z};
  const auto g = grad<double>(sum(sqrt(z)), wrt);
  CHECK((g[0].value().array() == 0.0).all());
  CHECK(std::isfinite(sum(sqrt(z)).item()));
}
