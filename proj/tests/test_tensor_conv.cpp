#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gstnet/conv.hpp"
#include "gstnet/gradcheck.hpp"
#include "reference.hpp"

using namespace gstnet;
using gstnet::testing::grouped_conv_oracle;
using gstnet::testing::max_abs_diff;
using gstnet::testing::naive_dense_conv;

TEST_CASE("tensor rejects zero-size dimensions") {
  CHECK_THROWS_AS(Tensor5(1, 0, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(Tensor5(0, 1, 1, 1, 1), std::invalid_argument);
  Tensor5 t(2, 3, 4, 5, 6);
  CHECK(t.size() == 2u * 3u * 4u * 5u * 6u);
  t.at(1, 2, 3, 4, 5) = 7.0;
  CHECK(t.data()[t.size() - 1] == 7.0);
}

TEST_CASE("scalar conv multiplies") {
  ConvSpec spec;
  spec.in_channels = spec.out_channels = 1;
  ConvLayer layer(spec);
  layer.weights.at(0, 0, 0, 0, 0) = 3.0;
  Tensor5 x(1, 1, 1, 1, 1);
  x.at(0, 0, 0, 0, 0) = 2.0;
  const Tensor5 y = conv_forward(x, layer);
  CHECK(y.at(0, 0, 0, 0, 0) == doctest::Approx(6.0));
}

TEST_CASE("ones kernel on ones input counts the overlap") {
  ConvSpec spec;
  spec.in_channels = spec.out_channels = 1;
  spec.k_h = spec.k_w = 3;
  spec.p_h = spec.p_w = 1;
  ConvLayer layer(spec);
  layer.weights.fill(1.0);
  Tensor5 x(1, 1, 1, 3, 3);
  x.fill(1.0);
  const Tensor5 y = conv_forward(x, layer);
  CHECK(y.at(0, 0, 0, 1, 1) == doctest::Approx(9.0));
  CHECK(y.at(0, 0, 0, 0, 0) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 2, 2) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 0, 1) == doctest::Approx(6.0));
}

TEST_CASE("grouped conv equals per-group dense oracle") {
  std::mt19937_64 rng(7);
  ConvSpec spec;
  spec.in_channels = 4;
  spec.out_channels = 4;
  spec.k_t = 3;
  spec.k_h = spec.k_w = 3;
  spec.p_t = spec.p_h = spec.p_w = 1;
  spec.groups = 2;
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(2, 4, 4, 8, 8);
  x.fill_uniform(rng, -1.0, 1.0);
  const Tensor5 got = conv_forward(x, layer);
  const Tensor5 want = grouped_conv_oracle(x, layer);
  CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("grouped conv oracle equivalence over random configurations") {
  std::mt19937_64 rng(2024);
  for (int it = 0; it < 30; ++it) {
    std::uniform_int_distribution<int> gd(1, 4);
    const int g = gd(rng);
    std::uniform_int_distribution<int> cd(1, 3);
    ConvSpec spec;
    spec.in_channels = g * cd(rng);
    spec.out_channels = g * cd(rng);
    spec.groups = g;
    std::uniform_int_distribution<int> kd(1, 3), sd(1, 2), pd(0, 1), xd(3, 7), td(1, 4), nd(1, 2);
    spec.k_t = kd(rng);
    spec.k_h = kd(rng);
    spec.k_w = kd(rng);
    spec.s_t = sd(rng);
    spec.s_h = sd(rng);
    spec.s_w = sd(rng);
    spec.p_t = pd(rng);
    spec.p_h = pd(rng);
    spec.p_w = pd(rng);
    spec.bias = it % 2 == 0;
    const int t = std::max(td(rng), spec.k_t);
    const int h = std::max(xd(rng), spec.k_h);
    const int w = std::max(xd(rng), spec.k_w);

    ConvLayer layer(spec);
    layer.init_fan_in_uniform(rng);
    Tensor5 x(nd(rng), spec.in_channels, t, h, w);
    x.fill_uniform(rng, -1.0, 1.0);
    const Tensor5 got = conv_forward(x, layer);
    const Tensor5 want = grouped_conv_oracle(x, layer);
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("g=1 matches the dense reference") {
  std::mt19937_64 rng(11);
  ConvSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 5;
  spec.k_t = 2;
  spec.k_h = 3;
  spec.k_w = 2;
  spec.p_h = 1;
  spec.s_h = 2;
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(2, 3, 3, 7, 6);
  x.fill_uniform(rng, -1.0, 1.0);
  CHECK(max_abs_diff(conv_forward(x, layer),
                     naive_dense_conv(x, layer.weights, spec, layer.bias)) < 1e-12);
}

TEST_CASE("conv is linear in its input") {
  std::mt19937_64 rng(3);
  ConvSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 3;
  spec.k_t = 3;
  spec.k_h = spec.k_w = 3;
  spec.p_t = spec.p_h = spec.p_w = 1;
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(1, 2, 4, 6, 6), y(1, 2, 4, 6, 6);
  x.fill_uniform(rng, -1.0, 1.0);
  y.fill_uniform(rng, -1.0, 1.0);
  const double a = 1.7, b = -0.4;
  Tensor5 combo = Tensor5::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) combo.data()[i] = a * x.data()[i] + b * y.data()[i];
  const Tensor5 lhs = conv_forward(combo, layer);
  const Tensor5 fx = conv_forward(x, layer);
  const Tensor5 fy = conv_forward(y, layer);
  Tensor5 rhs = Tensor5::zeros_like(lhs);
  for (std::size_t i = 0; i < lhs.size(); ++i) rhs.data()[i] = a * fx.data()[i] + b * fy.data()[i];
  CHECK(max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("spatial-only conv commutes with frame permutations exactly") {
  std::mt19937_64 rng(5);
  ConvSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 4;
  spec.k_h = spec.k_w = 3;
  spec.p_h = spec.p_w = 1;
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(1, 3, 5, 6, 6);
  x.fill_uniform(rng, -1.0, 1.0);
  const std::vector<int> perm{3, 0, 4, 1, 2};

  Tensor5 px = Tensor5::zeros_like(x);
  for (int c = 0; c < x.c(); ++c) {
    for (int t = 0; t < x.t(); ++t) {
      for (int h = 0; h < x.h(); ++h) {
        for (int w = 0; w < x.w(); ++w) px.at(0, c, t, h, w) = x.at(0, c, perm[t], h, w);
      }
    }
  }
  const Tensor5 y = conv_forward(x, layer);
  const Tensor5 py = conv_forward(px, layer);
  for (int c = 0; c < y.c(); ++c) {
    for (int t = 0; t < y.t(); ++t) {
      for (int h = 0; h < y.h(); ++h) {
        for (int w = 0; w < y.w(); ++w) {
          CHECK(py.at(0, c, t, h, w) == y.at(0, c, perm[t], h, w));  // bit-exact
        }
      }
    }
  }
}

TEST_CASE("conv rejects bad shapes and groups") {
  ConvSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 4;
  spec.groups = 2;
  CHECK_THROWS_AS(ConvLayer{spec}, std::invalid_argument);

  ConvSpec ok;
  ok.in_channels = 2;
  ok.out_channels = 2;
  ConvLayer layer(ok);
  Tensor5 wrong(1, 3, 1, 2, 2);
  CHECK_THROWS_AS(conv_forward(wrong, layer), std::invalid_argument);

  ConvSpec big;
  big.in_channels = big.out_channels = 1;
  big.k_h = 5;
  ConvLayer layer2(big);
  Tensor5 small(1, 1, 1, 3, 3);
  CHECK_THROWS_AS(conv_forward(small, layer2), std::invalid_argument);
}

TEST_CASE("scalar conv backward applies the product rule") {
  ConvSpec spec;
  spec.in_channels = spec.out_channels = 1;
  ConvLayer layer(spec);
  layer.weights.at(0, 0, 0, 0, 0) = 3.0;
  Tensor5 x(1, 1, 1, 1, 1);
  x.at(0, 0, 0, 0, 0) = 2.0;
  Tensor5 g(1, 1, 1, 1, 1);
  g.at(0, 0, 0, 0, 0) = 1.0;
  const Tensor5 gx = conv_backward(x, layer, g);
  CHECK(layer.grad_weights.at(0, 0, 0, 0, 0) == doctest::Approx(2.0));
  CHECK(gx.at(0, 0, 0, 0, 0) == doctest::Approx(3.0));
}

TEST_CASE("zero upstream gradient yields zero gradients") {
  std::mt19937_64 rng(13);
  ConvSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 2;
  spec.k_h = spec.k_w = 3;
  spec.p_h = spec.p_w = 1;
  spec.bias = true;
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(1, 2, 2, 4, 4);
  x.fill_uniform(rng, -1.0, 1.0);
  const Tensor5 y = conv_forward(x, layer);
  const Tensor5 gx = conv_backward(x, layer, Tensor5::zeros_like(y));
  for (std::size_t i = 0; i < gx.size(); ++i) CHECK(gx.data()[i] == 0.0);
  for (std::size_t i = 0; i < layer.grad_weights.size(); ++i) {
    CHECK(layer.grad_weights.data()[i] == 0.0);
  }
  for (double b : layer.grad_bias) CHECK(b == 0.0);
}

namespace {

// Weighted-sum loss through one conv; covers weights, bias, and input.
void check_conv_gradients(ConvSpec spec, const std::array<int, 5>& in_shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConvLayer layer(spec);
  layer.init_fan_in_uniform(rng);
  Tensor5 x(in_shape);
  x.fill_uniform(rng, -1.0, 1.0);

  const Tensor5 probe_shape = conv_forward(x, layer);
  Tensor5 probe = Tensor5::zeros_like(probe_shape);
  probe.fill_uniform(rng, -1.0, 1.0);

  const auto loss = [&]() {
    const Tensor5 y = conv_forward(x, layer);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data()[i] * probe.data()[i];
    return acc;
  };
  Tensor5 grad_input_store = Tensor5::zeros_like(x);
  const auto grads = [&]() {
    layer.zero_grad();
    grad_input_store = conv_backward(x, layer, probe);
  };

  std::vector<ParamBlock> blocks;
  blocks.push_back({"weights", &layer.weights.vec(), &layer.grad_weights.vec()});
  if (spec.bias) blocks.push_back({"bias", &layer.bias, &layer.grad_bias});
  blocks.push_back({"input", &x.vec(), &grad_input_store.vec()});

  GradCheckOptions opt;
  opt.max_elements_per_block = 40;
  opt.seed = seed;
  const auto reports = finite_diff_check(loss, grads, blocks, opt);
  for (const auto& r : reports) {
    INFO(r.param, " rel err ", r.max_rel_err);
    CHECK(r.pass);
  }
}

}  // namespace

TEST_CASE("conv backward passes finite differences") {
  ConvSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 3;
  spec.k_t = 2;
  spec.k_h = spec.k_w = 3;
  spec.p_h = spec.p_w = 1;
  spec.bias = true;
  check_conv_gradients(spec, {1, 2, 2, 5, 5}, 17);
}

TEST_CASE("conv backward passes finite differences on strided padded grouped cases") {
  ConvSpec strided;
  strided.in_channels = 4;
  strided.out_channels = 4;
  strided.k_t = 3;
  strided.k_h = strided.k_w = 3;
  strided.s_h = strided.s_w = 2;
  strided.p_t = strided.p_h = strided.p_w = 1;
  strided.groups = 2;
  check_conv_gradients(strided, {2, 4, 4, 6, 6}, 23);

  ConvSpec temporal_stride;
  temporal_stride.in_channels = 2;
  temporal_stride.out_channels = 2;
  temporal_stride.k_t = 3;
  temporal_stride.s_t = 2;
  temporal_stride.p_t = 1;
  check_conv_gradients(temporal_stride, {1, 2, 5, 3, 3}, 29);
}
