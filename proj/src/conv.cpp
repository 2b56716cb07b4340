#include "gstnet/conv.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gstnet {

namespace {

void axpy(double a, const double* __restrict x, double* __restrict y, int n) {
  for (int j = 0; j < n; ++j) y[j] += a * x[j];
}

void gemm_accumulate(const double* a, const double* b, double* c, int m, int k, int n) {
  // C (m x n) += A (m x k) * B (k x n), all row-major.
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      axpy(arow[p], b + static_cast<std::size_t>(p) * n, crow, n);
    }
  }
}

void gemm_at_b(const double* a, const double* b, double* c, int m, int k, int n) {
  // C (k x n) += A^T (k x m) * B (m x n); A is m x k row-major.
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      axpy(arow[p], brow, c + static_cast<std::size_t>(p) * n, n);
    }
  }
}

void gemm_a_bt(const double* a, const double* b, double* c, int m, int k, int n) {
  // C (m x n) += A (m x k) * B^T where B is n x k row-major.
  for (int i = 0; i < m; ++i) {
    const double* __restrict arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* __restrict brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// Per-thread scratch; kernels stay safe for concurrent invocation.
std::vector<double>& col_scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

std::vector<double>& grad_col_scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

struct ConvGeometry {
  int to, ho, wo;       // output extents
  int cg_in, cg_out;    // channels per group
  std::size_t cols;     // to*ho*wo
  std::size_t col_rows; // cg_in * k_t*k_h*k_w
};

ConvGeometry geometry(const ConvSpec& s, const Tensor5& input) {
  const auto ext = s.output_extent(input.t(), input.h(), input.w());
  ConvGeometry g;
  g.to = ext[0];
  g.ho = ext[1];
  g.wo = ext[2];
  g.cg_in = s.in_channels / s.groups;
  g.cg_out = s.out_channels / s.groups;
  g.cols = static_cast<std::size_t>(g.to) * g.ho * g.wo;
  g.col_rows = static_cast<std::size_t>(g.cg_in) * s.k_t * s.k_h * s.k_w;
  return g;
}

// Unrolls the receptive fields of one (sample, group) into a
// col_rows x cols matrix; zero where the window hangs over the padding.
void im2col(const Tensor5& input, const ConvSpec& s, const ConvGeometry& g, int n, int group,
            double* col) {
  const int c0 = group * g.cg_in;
  std::size_t row = 0;
  for (int c = 0; c < g.cg_in; ++c) {
    for (int kt = 0; kt < s.k_t; ++kt) {
      for (int kh = 0; kh < s.k_h; ++kh) {
        for (int kw = 0; kw < s.k_w; ++kw, ++row) {
          double* dst = col + row * g.cols;
          std::size_t p = 0;
          for (int to = 0; to < g.to; ++to) {
            const int ti = to * s.s_t - s.p_t + kt;
            const bool t_ok = ti >= 0 && ti < input.t();
            for (int ho = 0; ho < g.ho; ++ho) {
              const int hi = ho * s.s_h - s.p_h + kh;
              const bool h_ok = t_ok && hi >= 0 && hi < input.h();
              if (!h_ok) {
                for (int wo = 0; wo < g.wo; ++wo, ++p) dst[p] = 0.0;
                continue;
              }
              const double* src = input.data() + input.index(n, c0 + c, ti, hi, 0);
              for (int wo = 0; wo < g.wo; ++wo, ++p) {
                const int wi = wo * s.s_w - s.p_w + kw;
                dst[p] = (wi >= 0 && wi < input.w()) ? src[wi] : 0.0;
              }
            }
          }
        }
      }
    }
  }
}

// Scatters a col-shaped gradient back onto the (sample, group) input slice.
void col2im_add(Tensor5& grad_input, const ConvSpec& s, const ConvGeometry& g, int n, int group,
                const double* col) {
  const int c0 = group * g.cg_in;
  std::size_t row = 0;
  for (int c = 0; c < g.cg_in; ++c) {
    for (int kt = 0; kt < s.k_t; ++kt) {
      for (int kh = 0; kh < s.k_h; ++kh) {
        for (int kw = 0; kw < s.k_w; ++kw, ++row) {
          const double* src = col + row * g.cols;
          std::size_t p = 0;
          for (int to = 0; to < g.to; ++to) {
            const int ti = to * s.s_t - s.p_t + kt;
            if (ti < 0 || ti >= grad_input.t()) {
              p += static_cast<std::size_t>(g.ho) * g.wo;
              continue;
            }
            for (int ho = 0; ho < g.ho; ++ho) {
              const int hi = ho * s.s_h - s.p_h + kh;
              if (hi < 0 || hi >= grad_input.h()) {
                p += g.wo;
                continue;
              }
              double* dst = grad_input.data() + grad_input.index(n, c0 + c, ti, hi, 0);
              for (int wo = 0; wo < g.wo; ++wo, ++p) {
                const int wi = wo * s.s_w - s.p_w + kw;
                if (wi >= 0 && wi < grad_input.w()) dst[wi] += src[p];
              }
            }
          }
        }
      }
    }
  }
}

void check_input(const ConvSpec& s, const Tensor5& input) {
  s.validate();
  if (input.c() != s.in_channels) {
    throw std::invalid_argument("conv: input has " + std::to_string(input.c()) +
                                " channels, spec expects " + std::to_string(s.in_channels));
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("conv: channels must be >= 1");
  if (k_t < 1 || k_h < 1 || k_w < 1) throw std::invalid_argument("conv: kernel extents must be >= 1");
  if (s_t < 1 || s_h < 1 || s_w < 1) throw std::invalid_argument("conv: strides must be >= 1");
  if (p_t < 0 || p_h < 0 || p_w < 0) throw std::invalid_argument("conv: padding must be >= 0");
  if (groups < 1) throw std::invalid_argument("conv: groups must be >= 1");
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw std::invalid_argument("conv: groups=" + std::to_string(groups) +
                                " must divide C_i=" + std::to_string(in_channels) +
                                " and C_o=" + std::to_string(out_channels));
  }
}

std::array<int, 3> ConvSpec::output_extent(int t, int h, int w) const {
  const int to = (t + 2 * p_t - k_t) / s_t + 1;
  const int ho = (h + 2 * p_h - k_h) / s_h + 1;
  const int wo = (w + 2 * p_w - k_w) / s_w + 1;
  if (t + 2 * p_t < k_t || h + 2 * p_h < k_h || w + 2 * p_w < k_w) {
    throw std::invalid_argument("conv: padded input smaller than kernel");
  }
  return {to, ho, wo};
}

ConvLayer::ConvLayer(const ConvSpec& s) : spec(s) {
  spec.validate();
  weights = Tensor5(spec.weight_shape());
  if (spec.bias) bias.assign(spec.out_channels, 0.0);
}

void ConvLayer::ensure_grads() {
  if (grad_weights.empty()) grad_weights = Tensor5(spec.weight_shape());
  if (spec.bias && grad_bias.empty()) grad_bias.assign(spec.out_channels, 0.0);
}

void ConvLayer::init_fan_in_uniform(std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(spec.in_channels / spec.groups) * spec.k_t * spec.k_h * spec.k_w;
  const double bound = 1.0 / std::sqrt(fan_in);
  weights.fill_uniform(rng, -bound, bound);
  for (double& b : bias) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    b = dist(rng);
  }
}

void ConvLayer::zero_grad() {
  ensure_grads();
  grad_weights.fill(0.0);
  for (double& g : grad_bias) g = 0.0;
}

Tensor5 conv_forward(const Tensor5& input, const ConvLayer& layer) {
  const ConvSpec& s = layer.spec;
  check_input(s, input);
  const ConvGeometry g = geometry(s, input);

  Tensor5 output(input.n(), s.out_channels, g.to, g.ho, g.wo);
  std::vector<double>& col = col_scratch();
  col.resize(g.col_rows * g.cols);

  for (int n = 0; n < input.n(); ++n) {
    for (int b = 0; b < s.groups; ++b) {
      im2col(input, s, g, n, b, col.data());
      const double* wmat = layer.weights.data() + layer.weights.index(b * g.cg_out, 0, 0, 0, 0);
      double* out = output.data() + output.index(n, b * g.cg_out, 0, 0, 0);
      gemm_accumulate(wmat, col.data(), out, g.cg_out, static_cast<int>(g.col_rows),
                      static_cast<int>(g.cols));
    }
    if (!layer.bias.empty()) {
      for (int c = 0; c < s.out_channels; ++c) {
        double* out = output.data() + output.index(n, c, 0, 0, 0);
        const double b = layer.bias[c];
        for (std::size_t p = 0; p < g.cols; ++p) out[p] += b;
      }
    }
  }
  return output;
}

Tensor5 conv_backward(const Tensor5& input, ConvLayer& layer, const Tensor5& grad_out) {
  const ConvSpec& s = layer.spec;
  check_input(s, input);
  layer.ensure_grads();
  const ConvGeometry g = geometry(s, input);
  if (grad_out.n() != input.n() || grad_out.c() != s.out_channels || grad_out.t() != g.to ||
      grad_out.h() != g.ho || grad_out.w() != g.wo) {
    throw std::invalid_argument("conv backward: grad_out shape does not match forward output");
  }

  Tensor5 grad_input = Tensor5::zeros_like(input);
  std::vector<double>& col = col_scratch();
  col.resize(g.col_rows * g.cols);
  std::vector<double>& grad_col = grad_col_scratch();
  grad_col.resize(g.col_rows * g.cols);

  for (int n = 0; n < input.n(); ++n) {
    for (int b = 0; b < s.groups; ++b) {
      im2col(input, s, g, n, b, col.data());
      const double* go = grad_out.data() + grad_out.index(n, b * g.cg_out, 0, 0, 0);
      double* gw = layer.grad_weights.data() + layer.grad_weights.index(b * g.cg_out, 0, 0, 0, 0);
      // dW += dY * col^T
      gemm_a_bt(go, col.data(), gw, g.cg_out, static_cast<int>(g.cols),
                static_cast<int>(g.col_rows));
      // dcol = W^T * dY
      std::fill(grad_col.begin(), grad_col.end(), 0.0);
      const double* wmat = layer.weights.data() + layer.weights.index(b * g.cg_out, 0, 0, 0, 0);
      gemm_at_b(wmat, go, grad_col.data(), g.cg_out, static_cast<int>(g.col_rows),
                static_cast<int>(g.cols));
      col2im_add(grad_input, s, g, n, b, grad_col.data());
    }
    if (!layer.grad_bias.empty()) {
      for (int c = 0; c < s.out_channels; ++c) {
        const double* go = grad_out.data() + grad_out.index(n, c, 0, 0, 0);
        double acc = 0.0;
        for (std::size_t p = 0; p < g.cols; ++p) acc += go[p];
        layer.grad_bias[c] += acc;
      }
    }
  }
  return grad_input;
}

}  // namespace gstnet
