#include "gstnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gstnet {

Tensor5 relu_forward(const Tensor5& input) {
  Tensor5 out = Tensor5::zeros_like(input);
  for (std::size_t i = 0; i < input.size(); ++i) out.data()[i] = std::max(0.0, input.data()[i]);
  return out;
}

Tensor5 relu_backward(const Tensor5& grad_out, const Tensor5& output) {
  if (!grad_out.same_shape(output)) throw std::invalid_argument("relu backward: shape mismatch");
  Tensor5 grad = Tensor5::zeros_like(grad_out);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad.data()[i] = output.data()[i] > 0.0 ? grad_out.data()[i] : 0.0;
  }
  return grad;
}

Tensor5 max_pool_spatial_forward(const Tensor5& input, int kernel, int stride, int pad,
                                 std::vector<std::size_t>* argmax) {
  const int ho = (input.h() + 2 * pad - kernel) / stride + 1;
  const int wo = (input.w() + 2 * pad - kernel) / stride + 1;
  if (input.h() + 2 * pad < kernel || input.w() + 2 * pad < kernel) {
    throw std::invalid_argument("max pool: input smaller than kernel");
  }
  Tensor5 out(input.n(), input.c(), input.t(), ho, wo);
  if (argmax) argmax->assign(out.size(), 0);

  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      for (int t = 0; t < input.t(); ++t) {
        for (int i = 0; i < ho; ++i) {
          for (int j = 0; j < wo; ++j) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_idx = 0;
            for (int kh = 0; kh < kernel; ++kh) {
              const int hi = i * stride - pad + kh;
              if (hi < 0 || hi >= input.h()) continue;
              for (int kw = 0; kw < kernel; ++kw) {
                const int wi = j * stride - pad + kw;
                if (wi < 0 || wi >= input.w()) continue;
                const std::size_t idx = input.index(n, c, t, hi, wi);
                if (input.data()[idx] > best) {
                  best = input.data()[idx];
                  best_idx = idx;
                }
              }
            }
            const std::size_t oi = out.index(n, c, t, i, j);
            out.data()[oi] = best;
            if (argmax) (*argmax)[oi] = best_idx;
          }
        }
      }
    }
  }
  return out;
}

Tensor5 max_pool_spatial_backward(const Tensor5& grad_out, const Tensor5& input,
                                  const std::vector<std::size_t>& argmax) {
  if (argmax.size() != grad_out.size()) throw std::invalid_argument("max pool backward: bad argmax");
  Tensor5 grad = Tensor5::zeros_like(input);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad.data()[argmax[i]] += grad_out.data()[i];
  return grad;
}

Tensor5 global_avg_pool_spatial_forward(const Tensor5& input) {
  Tensor5 out(input.n(), input.c(), input.t(), 1, 1);
  const double inv = 1.0 / (static_cast<double>(input.h()) * input.w());
  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      for (int t = 0; t < input.t(); ++t) {
        const double* src = input.data() + input.index(n, c, t, 0, 0);
        double acc = 0.0;
        const std::size_t plane = static_cast<std::size_t>(input.h()) * input.w();
        for (std::size_t p = 0; p < plane; ++p) acc += src[p];
        out.at(n, c, t, 0, 0) = acc * inv;
      }
    }
  }
  return out;
}

Tensor5 global_avg_pool_spatial_backward(const Tensor5& grad_out,
                                         const std::array<int, 5>& in_shape) {
  Tensor5 grad(in_shape);
  const double inv = 1.0 / (static_cast<double>(in_shape[3]) * in_shape[4]);
  for (int n = 0; n < grad.n(); ++n) {
    for (int c = 0; c < grad.c(); ++c) {
      for (int t = 0; t < grad.t(); ++t) {
        const double g = grad_out.at(n, c, t, 0, 0) * inv;
        double* dst = grad.data() + grad.index(n, c, t, 0, 0);
        const std::size_t plane = static_cast<std::size_t>(grad.h()) * grad.w();
        for (std::size_t p = 0; p < plane; ++p) dst[p] = g;
      }
    }
  }
  return grad;
}

LinearLayer::LinearLayer(int in, int out) : in_features(in), out_features(out) {
  if (in < 1 || out < 1) throw std::invalid_argument("linear: features must be >= 1");
  weights.assign(static_cast<std::size_t>(in) * out, 0.0);
  bias.assign(out, 0.0);
  grad_weights.assign(weights.size(), 0.0);
  grad_bias.assign(out, 0.0);
}

void LinearLayer::init_fan_in_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weights) w = dist(rng);
  for (double& b : bias) b = dist(rng);
}

void LinearLayer::zero_grad() {
  for (double& g : grad_weights) g = 0.0;
  for (double& g : grad_bias) g = 0.0;
}

Tensor5 linear_per_frame_forward(const Tensor5& input, const LinearLayer& layer) {
  if (input.c() != layer.in_features || input.h() != 1 || input.w() != 1) {
    throw std::invalid_argument("linear: expected N x C x T x 1 x 1 input with C=in_features");
  }
  Tensor5 out(input.n(), layer.out_features, input.t(), 1, 1);
  for (int n = 0; n < input.n(); ++n) {
    for (int t = 0; t < input.t(); ++t) {
      for (int k = 0; k < layer.out_features; ++k) {
        const double* wrow = layer.weights.data() + static_cast<std::size_t>(k) * layer.in_features;
        double acc = layer.bias[k];
        for (int c = 0; c < layer.in_features; ++c) acc += wrow[c] * input.at(n, c, t, 0, 0);
        out.at(n, k, t, 0, 0) = acc;
      }
    }
  }
  return out;
}

Tensor5 linear_per_frame_backward(const Tensor5& grad_out, const Tensor5& input,
                                  LinearLayer& layer) {
  Tensor5 grad_in = Tensor5::zeros_like(input);
  for (int n = 0; n < input.n(); ++n) {
    for (int t = 0; t < input.t(); ++t) {
      for (int k = 0; k < layer.out_features; ++k) {
        const double g = grad_out.at(n, k, t, 0, 0);
        double* gw = layer.grad_weights.data() + static_cast<std::size_t>(k) * layer.in_features;
        const double* wrow = layer.weights.data() + static_cast<std::size_t>(k) * layer.in_features;
        layer.grad_bias[k] += g;
        for (int c = 0; c < layer.in_features; ++c) {
          gw[c] += g * input.at(n, c, t, 0, 0);
          grad_in.at(n, c, t, 0, 0) += g * wrow[c];
        }
      }
    }
  }
  return grad_in;
}

Tensor5 dropout_forward(const Tensor5& input, double rate, std::mt19937_64& rng,
                        std::vector<double>* mask) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  Tensor5 out = Tensor5::zeros_like(input);
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  if (mask) mask->assign(input.size(), 0.0);
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double keep = dist(rng) >= rate ? scale : 0.0;
    if (mask) (*mask)[i] = keep;
    out.data()[i] = input.data()[i] * keep;
  }
  return out;
}

Tensor5 dropout_backward(const Tensor5& grad_out, const std::vector<double>& mask) {
  if (mask.size() != grad_out.size()) throw std::invalid_argument("dropout backward: bad mask");
  Tensor5 grad = Tensor5::zeros_like(grad_out);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad.data()[i] = grad_out.data()[i] * mask[i];
  return grad;
}

Tensor5 frame_average_forward(const Tensor5& per_frame) {
  if (per_frame.h() != 1 || per_frame.w() != 1) {
    throw std::invalid_argument("frame average: expected N x K x T x 1 x 1");
  }
  Tensor5 out(per_frame.n(), per_frame.c(), 1, 1, 1);
  const int T = per_frame.t();
  std::vector<double> addends(T);
  for (int n = 0; n < per_frame.n(); ++n) {
    for (int k = 0; k < per_frame.c(); ++k) {
      for (int t = 0; t < T; ++t) addends[t] = per_frame.at(n, k, t, 0, 0);
      std::sort(addends.begin(), addends.end());
      double acc = 0.0;
      for (int t = 0; t < T; ++t) acc += addends[t];
      out.at(n, k, 0, 0, 0) = acc / T;
    }
  }
  return out;
}

Tensor5 frame_average_backward(const Tensor5& grad_out, int frames) {
  Tensor5 grad(grad_out.n(), grad_out.c(), frames, 1, 1);
  for (int n = 0; n < grad_out.n(); ++n) {
    for (int k = 0; k < grad_out.c(); ++k) {
      const double g = grad_out.at(n, k, 0, 0, 0) / frames;
      for (int t = 0; t < frames; ++t) grad.at(n, k, t, 0, 0) = g;
    }
  }
  return grad;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> probs(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

double softmax_cross_entropy(const Tensor5& logits, const std::vector<int>& labels,
                             Tensor5* grad_logits) {
  const int N = logits.n(), K = logits.c();
  if (logits.t() != 1 || logits.h() != 1 || logits.w() != 1) {
    throw std::invalid_argument("cross entropy: expected N x K x 1 x 1 x 1 logits");
  }
  if (static_cast<int>(labels.size()) != N) {
    throw std::invalid_argument("cross entropy: labels length must equal batch size");
  }
  if (grad_logits) *grad_logits = Tensor5::zeros_like(logits);

  double loss = 0.0;
  std::vector<double> row(K);
  for (int n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= K) {
      throw std::invalid_argument("cross entropy: label " + std::to_string(y) + " out of range");
    }
    for (int k = 0; k < K; ++k) row[k] = logits.at(n, k, 0, 0, 0);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (int k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    const double log_z = std::log(z) + mx;
    loss += log_z - row[y];
    if (grad_logits) {
      for (int k = 0; k < K; ++k) {
        const double p = std::exp(row[k] - log_z);
        grad_logits->at(n, k, 0, 0, 0) = (p - (k == y ? 1.0 : 0.0)) / N;
      }
    }
  }
  return loss / N;
}

}  // namespace gstnet
