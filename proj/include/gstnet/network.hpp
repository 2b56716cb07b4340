#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gstnet/batchnorm.hpp"
#include "gstnet/blocks.hpp"
#include "gstnet/conv.hpp"
#include "gstnet/ops.hpp"

namespace gstnet {

enum class NodeKind {
  Input,
  Conv,
  BatchNorm,
  Relu,
  MaxPoolSpatial,
  Add,
  ConcatChannels,
  SliceChannels,
  GlobalAvgPoolSpatial,
  Dropout,
  Linear,
  FrameAverage,
};

enum class PathTag { Shared, Spatial, Temporal };

std::string path_tag_name(PathTag tag);
PathTag parse_path_tag(const std::string& text);

struct Node {
  NodeKind kind = NodeKind::Input;
  std::string name;
  std::vector<int> inputs;  // producer node indices

  ConvLayer conv;      // Conv
  BnLayer bn;          // BatchNorm
  LinearLayer linear;  // Linear
  int slice_begin = 0, slice_end = 0;      // SliceChannels
  int pool_kernel = 3, pool_stride = 2, pool_pad = 1;  // MaxPoolSpatial
  double dropout_rate = 0.0;               // Dropout

  int stage = -1;
  int block_index = -1;
  PathTag path = PathTag::Shared;
};

// One substituted spatial-temporal module with parallel paths: where its
// output channels split and which BN normalizes the concatenation.
struct GstBlockInfo {
  int stage = -1;
  int block_index = -1;
  int conv_slot = 0;  // which 3x3 of the residual block was replaced
  int bn_node = -1;
  int spatial_channels = 0;
  int temporal_channels = 0;
  std::string label;
};

struct NetOutput {
  Tensor5 logits;     // N x K x 1 x 1 x 1
  Tensor5 per_frame;  // N x K x T x 1 x 1
  double logit(int n, int k) const { return logits.at(n, k, 0, 0, 0); }
  double per_frame_logit(int n, int t, int k) const { return per_frame.at(n, k, t, 0, 0); }
};

struct ForwardOptions {
  Mode mode = Mode::Eval;
  bool update_bn = true;          // only meaningful in train mode
  std::mt19937_64* rng = nullptr; // required when dropout is active in train mode
};

// Per-node state saved by forward for backward.
struct ForwardCache {
  std::vector<Tensor5> out;
  std::vector<BnCache> bn;
  std::vector<std::vector<std::size_t>> pool_argmax;
  std::vector<std::vector<double>> dropout_mask;
  Mode mode = Mode::Eval;
};

class Network {
 public:
  NetworkSpec spec;
  std::vector<Node> nodes;  // topological order, nodes[0] is the input
  int per_frame_node = -1;  // Linear output, N x K x T x 1 x 1
  int output_node = -1;     // FrameAverage output
  std::vector<GstBlockInfo> gst_blocks;

  NetOutput forward(const Tensor5& batch, const ForwardOptions& opts = {},
                    ForwardCache* cache = nullptr);

  // Accumulates parameter gradients; grad_logits matches the logits shape.
  // Returns the gradient with respect to the network input.
  Tensor5 backward(const ForwardCache& cache, const Tensor5& grad_logits);

  void zero_grad();

  // Visits every learnable parameter block in construction order.
  void for_each_param(
      const std::function<void(const std::string& name, std::vector<double>& value,
                               std::vector<double>& grad)>& fn);
  void for_each_param(
      const std::function<void(const std::string& name, const std::vector<double>& value)>& fn)
      const;

  long long param_count() const;

  // Snapshot/restore of BN running statistics (the only state a pure
  // forward evaluation may not mutate).
  std::vector<std::vector<double>> save_bn_stats() const;
  void restore_bn_stats(const std::vector<std::vector<double>>& stats);
};

// Builders. make_gst_block / make_block append the subgraph computing the
// substituted convolution (everything between the residual block's input
// and its following BN) and return the index of the node producing C_o
// channels. Weights are left zero-initialized; make_network seeds them.
int make_gst_block(Network& net, int input_node, int c_i, int c_o, const GstConfig& cfg,
                   int spatial_stride, const std::string& name_prefix, int stage, int block_index,
                   std::vector<GstBlockInfo>* info_out);
int make_block(Network& net, int input_node, const BlockKind& kind, int c_i, int c_o,
               int spatial_stride, const std::string& name_prefix, int stage, int block_index);

Network make_network(const NetworkSpec& spec);

}  // namespace gstnet
