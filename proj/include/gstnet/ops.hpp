#pragma once

#include <random>
#include <vector>

#include "gstnet/tensor.hpp"

namespace gstnet {

Tensor5 relu_forward(const Tensor5& input);
Tensor5 relu_backward(const Tensor5& grad_out, const Tensor5& output);

// 3x3 stride-2 pad-1 max pool applied per frame. argmax records the flat
// input index feeding each output element.
Tensor5 max_pool_spatial_forward(const Tensor5& input, int kernel, int stride, int pad,
                                 std::vector<std::size_t>* argmax);
Tensor5 max_pool_spatial_backward(const Tensor5& grad_out, const Tensor5& input,
                                  const std::vector<std::size_t>& argmax);

// Averages over H and W, keeping T: output is N x C x T x 1 x 1.
Tensor5 global_avg_pool_spatial_forward(const Tensor5& input);
Tensor5 global_avg_pool_spatial_backward(const Tensor5& grad_out, const std::array<int, 5>& in_shape);

struct LinearLayer {
  int in_features = 0;
  int out_features = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;

  LinearLayer() = default;
  LinearLayer(int in, int out);
  void init_fan_in_uniform(std::mt19937_64& rng);
  void zero_grad();
};

// Applies the shared linear map to every frame of a pooled N x C x T x 1 x 1
// tensor, yielding N x K x T x 1 x 1.
Tensor5 linear_per_frame_forward(const Tensor5& input, const LinearLayer& layer);
Tensor5 linear_per_frame_backward(const Tensor5& grad_out, const Tensor5& input,
                                  LinearLayer& layer);

// Inverted dropout; mask holds keep*scale factors so backward is a product.
Tensor5 dropout_forward(const Tensor5& input, double rate, std::mt19937_64& rng,
                        std::vector<double>* mask);
Tensor5 dropout_backward(const Tensor5& grad_out, const std::vector<double>& mask);

// Mean over T of per-frame logits (N x K x T x 1 x 1 -> N x K x 1 x 1 x 1).
// The reduction sorts the T addends first so the result is bit-identical
// under any permutation of the frame axis.
Tensor5 frame_average_forward(const Tensor5& per_frame);
Tensor5 frame_average_backward(const Tensor5& grad_out, int frames);

// Mean negative log-softmax probability of the true class over the batch.
// logits: N x K x 1 x 1 x 1. Throws on out-of-range labels.
double softmax_cross_entropy(const Tensor5& logits, const std::vector<int>& labels,
                             Tensor5* grad_logits = nullptr);

std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace gstnet
