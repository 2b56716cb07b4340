#pragma once

#include <vector>

#include "gstnet/tensor.hpp"

namespace gstnet {

enum class Mode { Train, Eval };

struct BnLayer {
  int channels = 0;
  std::vector<double> gamma;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  std::vector<double> grad_gamma;
  std::vector<double> grad_shift;
  double epsilon = 1e-5;
  double momentum = 0.1;

  BnLayer() = default;
  explicit BnLayer(int c);
  void zero_grad();
};

// Saved by bn_forward, consumed by bn_backward.
struct BnCache {
  Mode mode = Mode::Train;
  std::vector<double> mean;     // per channel, stats used for normalization
  std::vector<double> inv_std;  // 1/sqrt(var + eps)
  Tensor5 normalized;           // x_hat
};

// Train mode normalizes by batch statistics over (N,T,H,W) and, when
// update_running is set, folds them into the running statistics with the
// layer's momentum (running = (1-m)*running + m*batch, unbiased variance).
// Eval mode normalizes by the running statistics.
Tensor5 bn_forward(const Tensor5& input, BnLayer& layer, Mode mode, BnCache* cache = nullptr,
                   bool update_running = true);

// Accumulates gamma/shift gradients into the layer and returns grad_input.
Tensor5 bn_backward(const Tensor5& grad_out, BnLayer& layer, const BnCache& cache);

}  // namespace gstnet
