#pragma once

#include <array>
#include <random>

#include "gstnet/tensor.hpp"

namespace gstnet {

// Shape/stride/padding/groups description of one grouped 3D cross-correlation.
// A spatial-only conv is the special case k_t = 1, p_t = 0, s_t = 1.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int k_t = 1, k_h = 1, k_w = 1;
  int s_t = 1, s_h = 1, s_w = 1;
  int p_t = 0, p_h = 0, p_w = 0;
  int groups = 1;
  bool bias = false;

  void validate() const;  // throws std::invalid_argument
  std::array<int, 5> weight_shape() const {
    return {out_channels, in_channels / groups, k_t, k_h, k_w};
  }
  long long weight_count() const {
    return 1LL * out_channels * (in_channels / groups) * k_t * k_h * k_w;
  }
  // Output (T',H',W') for a given input extent; throws if the padded input
  // is smaller than the kernel.
  std::array<int, 3> output_extent(int t, int h, int w) const;
};

struct ConvLayer {
  ConvSpec spec;
  Tensor5 weights;  // C_o x (C_i/g) x k_t x k_h x k_w
  std::vector<double> bias;
  Tensor5 grad_weights;
  std::vector<double> grad_bias;

  ConvLayer() = default;
  explicit ConvLayer(const ConvSpec& s);

  void init_fan_in_uniform(std::mt19937_64& rng);
  // Gradient slots are allocated on first use; cost analysis over large
  // networks never pays for them.
  void ensure_grads();
  void zero_grad();
};

Tensor5 conv_forward(const Tensor5& input, const ConvLayer& layer);

// Accumulates weight/bias gradients into the layer's slots (additive) and
// returns the gradient with respect to the input.
Tensor5 conv_backward(const Tensor5& input, ConvLayer& layer, const Tensor5& grad_out);

}  // namespace gstnet
