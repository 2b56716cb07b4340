#include "gstnet/network.hpp"

#include <stdexcept>

namespace gstnet {

std::string path_tag_name(PathTag tag) {
  switch (tag) {
    case PathTag::Shared: return "shared";
    case PathTag::Spatial: return "spatial";
    case PathTag::Temporal: return "temporal";
  }
  return "?";
}

PathTag parse_path_tag(const std::string& text) {
  if (text == "shared") return PathTag::Shared;
  if (text == "spatial") return PathTag::Spatial;
  if (text == "temporal") return PathTag::Temporal;
  throw std::invalid_argument("unknown path tag '" + text + "'");
}

namespace {

Tensor5 concat_channels(const Tensor5& a, const Tensor5& b) {
  if (a.n() != b.n() || a.t() != b.t() || a.h() != b.h() || a.w() != b.w()) {
    throw std::invalid_argument("concat: non-channel extents differ");
  }
  Tensor5 out(a.n(), a.c() + b.c(), a.t(), a.h(), a.w());
  const std::size_t plane = static_cast<std::size_t>(a.t()) * a.h() * a.w();
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < a.c(); ++c) {
      std::copy_n(a.data() + a.index(n, c, 0, 0, 0), plane, out.data() + out.index(n, c, 0, 0, 0));
    }
    for (int c = 0; c < b.c(); ++c) {
      std::copy_n(b.data() + b.index(n, c, 0, 0, 0), plane,
                  out.data() + out.index(n, a.c() + c, 0, 0, 0));
    }
  }
  return out;
}

Tensor5 slice_channels(const Tensor5& in, int begin, int end) {
  if (begin < 0 || end > in.c() || begin >= end) {
    throw std::invalid_argument("slice: bad channel range");
  }
  Tensor5 out(in.n(), end - begin, in.t(), in.h(), in.w());
  const std::size_t plane = static_cast<std::size_t>(in.t()) * in.h() * in.w();
  for (int n = 0; n < in.n(); ++n) {
    for (int c = begin; c < end; ++c) {
      std::copy_n(in.data() + in.index(n, c, 0, 0, 0), plane,
                  out.data() + out.index(n, c - begin, 0, 0, 0));
    }
  }
  return out;
}

Tensor5 add_tensors(const Tensor5& a, const Tensor5& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Tensor5 out = Tensor5::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

void accumulate(Tensor5& dst, Tensor5&& src) {
  if (dst.empty()) {
    dst = std::move(src);
    return;
  }
  if (!dst.same_shape(src)) throw std::invalid_argument("grad accumulate: shape mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

}  // namespace

NetOutput Network::forward(const Tensor5& batch, const ForwardOptions& opts, ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.mode = opts.mode;
  cc.out.assign(nodes.size(), Tensor5());
  cc.bn.assign(nodes.size(), BnCache());
  cc.pool_argmax.assign(nodes.size(), {});
  cc.dropout_mask.assign(nodes.size(), {});

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Node& node = nodes[i];
    const auto in = [&](int slot) -> const Tensor5& { return cc.out[node.inputs[slot]]; };
    switch (node.kind) {
      case NodeKind::Input:
        cc.out[i] = batch;
        break;
      case NodeKind::Conv:
        cc.out[i] = conv_forward(in(0), node.conv);
        break;
      case NodeKind::BatchNorm:
        cc.out[i] = bn_forward(in(0), node.bn, opts.mode, &cc.bn[i],
                               opts.mode == Mode::Train && opts.update_bn);
        break;
      case NodeKind::Relu:
        cc.out[i] = relu_forward(in(0));
        break;
      case NodeKind::MaxPoolSpatial:
        cc.out[i] = max_pool_spatial_forward(in(0), node.pool_kernel, node.pool_stride,
                                             node.pool_pad, &cc.pool_argmax[i]);
        break;
      case NodeKind::Add:
        cc.out[i] = add_tensors(in(0), in(1));
        break;
      case NodeKind::ConcatChannels:
        cc.out[i] = concat_channels(in(0), in(1));
        break;
      case NodeKind::SliceChannels:
        cc.out[i] = slice_channels(in(0), node.slice_begin, node.slice_end);
        break;
      case NodeKind::GlobalAvgPoolSpatial:
        cc.out[i] = global_avg_pool_spatial_forward(in(0));
        break;
      case NodeKind::Dropout:
        if (opts.mode == Mode::Train && node.dropout_rate > 0.0) {
          if (!opts.rng) throw std::invalid_argument("forward: dropout in train mode needs an rng");
          cc.out[i] = dropout_forward(in(0), node.dropout_rate, *opts.rng, &cc.dropout_mask[i]);
        } else {
          cc.out[i] = in(0);
        }
        break;
      case NodeKind::Linear:
        cc.out[i] = linear_per_frame_forward(in(0), node.linear);
        break;
      case NodeKind::FrameAverage:
        cc.out[i] = frame_average_forward(in(0));
        break;
    }
  }

  NetOutput result;
  result.logits = cc.out[output_node];
  result.per_frame = cc.out[per_frame_node];
  return result;
}

Tensor5 Network::backward(const ForwardCache& cache, const Tensor5& grad_logits) {
  if (cache.out.size() != nodes.size()) {
    throw std::invalid_argument("backward: cache does not match network");
  }
  std::vector<Tensor5> grad(nodes.size());
  grad[output_node] = grad_logits;

  for (std::size_t ri = nodes.size(); ri-- > 0;) {
    if (grad[ri].empty()) continue;
    Node& node = nodes[ri];
    const Tensor5& g = grad[ri];
    const auto in_out = [&](int slot) -> const Tensor5& { return cache.out[node.inputs[slot]]; };
    const auto push = [&](int slot, Tensor5&& t) { accumulate(grad[node.inputs[slot]], std::move(t)); };

    switch (node.kind) {
      case NodeKind::Input:
        break;
      case NodeKind::Conv:
        push(0, conv_backward(in_out(0), node.conv, g));
        break;
      case NodeKind::BatchNorm:
        push(0, bn_backward(g, node.bn, cache.bn[ri]));
        break;
      case NodeKind::Relu:
        push(0, relu_backward(g, cache.out[ri]));
        break;
      case NodeKind::MaxPoolSpatial:
        push(0, max_pool_spatial_backward(g, in_out(0), cache.pool_argmax[ri]));
        break;
      case NodeKind::Add: {
        Tensor5 copy_a = g;
        Tensor5 copy_b = g;
        push(0, std::move(copy_a));
        push(1, std::move(copy_b));
        break;
      }
      case NodeKind::ConcatChannels: {
        const int ca = in_out(0).c();
        const int cb = in_out(1).c();
        push(0, slice_channels(g, 0, ca));
        push(1, slice_channels(g, ca, ca + cb));
        break;
      }
      case NodeKind::SliceChannels: {
        Tensor5 full = Tensor5::zeros_like(in_out(0));
        const std::size_t plane = static_cast<std::size_t>(g.t()) * g.h() * g.w();
        for (int n = 0; n < g.n(); ++n) {
          for (int c = 0; c < g.c(); ++c) {
            std::copy_n(g.data() + g.index(n, c, 0, 0, 0), plane,
                        full.data() + full.index(n, node.slice_begin + c, 0, 0, 0));
          }
        }
        push(0, std::move(full));
        break;
      }
      case NodeKind::GlobalAvgPoolSpatial:
        push(0, global_avg_pool_spatial_backward(g, in_out(0).shape()));
        break;
      case NodeKind::Dropout:
        if (!cache.dropout_mask[ri].empty()) {
          push(0, dropout_backward(g, cache.dropout_mask[ri]));
        } else {
          Tensor5 copy = g;
          push(0, std::move(copy));
        }
        break;
      case NodeKind::Linear:
        push(0, linear_per_frame_backward(g, in_out(0), node.linear));
        break;
      case NodeKind::FrameAverage:
        push(0, frame_average_backward(g, in_out(0).t()));
        break;
    }
    if (ri != 0) grad[ri] = Tensor5();  // free as we go
  }

  if (grad[0].empty()) return Tensor5::zeros_like(cache.out[0]);
  return std::move(grad[0]);
}

void Network::zero_grad() {
  for (Node& node : nodes) {
    switch (node.kind) {
      case NodeKind::Conv: node.conv.zero_grad(); break;
      case NodeKind::BatchNorm: node.bn.zero_grad(); break;
      case NodeKind::Linear: node.linear.zero_grad(); break;
      default: break;
    }
  }
}

void Network::for_each_param(
    const std::function<void(const std::string&, std::vector<double>&, std::vector<double>&)>& fn) {
  for (Node& node : nodes) {
    switch (node.kind) {
      case NodeKind::Conv:
        fn(node.name + ".weight", node.conv.weights.vec(), node.conv.grad_weights.vec());
        if (!node.conv.bias.empty()) fn(node.name + ".bias", node.conv.bias, node.conv.grad_bias);
        break;
      case NodeKind::BatchNorm:
        fn(node.name + ".gamma", node.bn.gamma, node.bn.grad_gamma);
        fn(node.name + ".shift", node.bn.shift, node.bn.grad_shift);
        break;
      case NodeKind::Linear:
        fn(node.name + ".weight", node.linear.weights, node.linear.grad_weights);
        fn(node.name + ".bias", node.linear.bias, node.linear.grad_bias);
        break;
      default:
        break;
    }
  }
}

void Network::for_each_param(
    const std::function<void(const std::string&, const std::vector<double>&)>& fn) const {
  const_cast<Network*>(this)->for_each_param(
      [&](const std::string& name, std::vector<double>& value, std::vector<double>&) {
        fn(name, value);
      });
}

long long Network::param_count() const {
  long long total = 0;
  for_each_param([&](const std::string&, const std::vector<double>& v) {
    total += static_cast<long long>(v.size());
  });
  return total;
}

std::vector<std::vector<double>> Network::save_bn_stats() const {
  std::vector<std::vector<double>> stats;
  for (const Node& node : nodes) {
    if (node.kind != NodeKind::BatchNorm) continue;
    std::vector<double> s = node.bn.running_mean;
    s.insert(s.end(), node.bn.running_var.begin(), node.bn.running_var.end());
    stats.push_back(std::move(s));
  }
  return stats;
}

void Network::restore_bn_stats(const std::vector<std::vector<double>>& stats) {
  std::size_t si = 0;
  for (Node& node : nodes) {
    if (node.kind != NodeKind::BatchNorm) continue;
    if (si >= stats.size()) throw std::invalid_argument("restore_bn_stats: too few entries");
    const std::vector<double>& s = stats[si++];
    const std::size_t c = node.bn.running_mean.size();
    if (s.size() != 2 * c) throw std::invalid_argument("restore_bn_stats: size mismatch");
    std::copy_n(s.begin(), c, node.bn.running_mean.begin());
    std::copy_n(s.begin() + c, c, node.bn.running_var.begin());
  }
}

}  // namespace gstnet
