#include "gstnet/batchnorm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gstnet {

BnLayer::BnLayer(int c) : channels(c) {
  if (c < 1) throw std::invalid_argument("bn: channels must be >= 1");
  gamma.assign(c, 1.0);
  shift.assign(c, 0.0);
  running_mean.assign(c, 0.0);
  running_var.assign(c, 1.0);
  grad_gamma.assign(c, 0.0);
  grad_shift.assign(c, 0.0);
}

void BnLayer::zero_grad() {
  for (double& g : grad_gamma) g = 0.0;
  for (double& g : grad_shift) g = 0.0;
}

namespace {
// Population per channel: all (n,t,h,w) positions.
std::size_t channel_population(const Tensor5& x) {
  return static_cast<std::size_t>(x.n()) * x.t() * x.h() * x.w();
}

template <typename Fn>
void for_each_channel_value(const Tensor5& x, int c, Fn&& fn) {
  const std::size_t plane = static_cast<std::size_t>(x.t()) * x.h() * x.w();
  for (int n = 0; n < x.n(); ++n) {
    const std::size_t base = x.index(n, c, 0, 0, 0);
    for (std::size_t p = 0; p < plane; ++p) fn(base + p);
  }
}
}  // namespace

Tensor5 bn_forward(const Tensor5& input, BnLayer& layer, Mode mode, BnCache* cache,
                   bool update_running) {
  if (input.c() != layer.channels) {
    throw std::invalid_argument("bn: input has " + std::to_string(input.c()) +
                                " channels, layer has " + std::to_string(layer.channels));
  }
  const int C = layer.channels;
  const std::size_t m = channel_population(input);

  std::vector<double> mean(C, 0.0), inv_std(C, 0.0);
  if (mode == Mode::Train) {
    for (int c = 0; c < C; ++c) {
      double sum = 0.0;
      for_each_channel_value(input, c, [&](std::size_t i) { sum += input.data()[i]; });
      const double mu = sum / static_cast<double>(m);
      double sq = 0.0;
      for_each_channel_value(input, c, [&](std::size_t i) {
        const double d = input.data()[i] - mu;
        sq += d * d;
      });
      const double var = sq / static_cast<double>(m);  // biased, used for normalization
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + layer.epsilon);
      if (update_running) {
        const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
        layer.running_mean[c] = (1.0 - layer.momentum) * layer.running_mean[c] + layer.momentum * mu;
        layer.running_var[c] = (1.0 - layer.momentum) * layer.running_var[c] + layer.momentum * unbiased;
      }
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = layer.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(layer.running_var[c] + layer.epsilon);
    }
  }

  Tensor5 output = Tensor5::zeros_like(input);
  Tensor5 normalized = Tensor5::zeros_like(input);
  for (int c = 0; c < C; ++c) {
    const double mu = mean[c], is = inv_std[c];
    const double g = layer.gamma[c], b = layer.shift[c];
    for_each_channel_value(input, c, [&](std::size_t i) {
      const double xh = (input.data()[i] - mu) * is;
      normalized.data()[i] = xh;
      output.data()[i] = g * xh + b;
    });
  }

  if (cache) {
    cache->mode = mode;
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->normalized = std::move(normalized);
  }
  return output;
}

Tensor5 bn_backward(const Tensor5& grad_out, BnLayer& layer, const BnCache& cache) {
  const Tensor5& xh = cache.normalized;
  if (!grad_out.same_shape(xh)) {
    throw std::invalid_argument("bn backward: grad_out shape mismatch");
  }
  const int C = layer.channels;
  const double m = static_cast<double>(channel_population(grad_out));
  Tensor5 grad_input = Tensor5::zeros_like(grad_out);

  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for_each_channel_value(grad_out, c, [&](std::size_t i) {
      sum_dy += grad_out.data()[i];
      sum_dy_xh += grad_out.data()[i] * xh.data()[i];
    });
    layer.grad_gamma[c] += sum_dy_xh;
    layer.grad_shift[c] += sum_dy;

    const double g_is = layer.gamma[c] * cache.inv_std[c];
    if (cache.mode == Mode::Train) {
      const double mean_dy = sum_dy / m;
      const double mean_dy_xh = sum_dy_xh / m;
      for_each_channel_value(grad_out, c, [&](std::size_t i) {
        grad_input.data()[i] =
            g_is * (grad_out.data()[i] - mean_dy - xh.data()[i] * mean_dy_xh);
      });
    } else {
      for_each_channel_value(grad_out, c, [&](std::size_t i) {
        grad_input.data()[i] = g_is * grad_out.data()[i];
      });
    }
  }
  return grad_input;
}

}  // namespace gstnet
