#include <stdexcept>

#include "gstnet/network.hpp"

namespace gstnet {

namespace {

int add_node(Network& net, Node node) {
  net.nodes.push_back(std::move(node));
  return static_cast<int>(net.nodes.size()) - 1;
}

int add_conv(Network& net, int input, const std::string& name, const ConvSpec& spec, int stage,
             int block, PathTag path = PathTag::Shared) {
  Node node;
  node.kind = NodeKind::Conv;
  node.name = name;
  node.inputs = {input};
  node.conv = ConvLayer(spec);
  node.stage = stage;
  node.block_index = block;
  node.path = path;
  return add_node(net, std::move(node));
}

int add_bn(Network& net, int input, const std::string& name, int channels, int stage, int block) {
  Node node;
  node.kind = NodeKind::BatchNorm;
  node.name = name;
  node.inputs = {input};
  node.bn = BnLayer(channels);
  node.stage = stage;
  node.block_index = block;
  return add_node(net, std::move(node));
}

int add_simple(Network& net, NodeKind kind, int input, const std::string& name, int stage = -1,
               int block = -1) {
  Node node;
  node.kind = kind;
  node.name = name;
  node.inputs = {input};
  node.stage = stage;
  node.block_index = block;
  return add_node(net, std::move(node));
}

ConvSpec spatial_conv(int c_i, int c_o, int k, int stride, int pad) {
  ConvSpec s;
  s.in_channels = c_i;
  s.out_channels = c_o;
  s.k_h = s.k_w = k;
  s.s_h = s.s_w = stride;
  s.p_h = s.p_w = pad;
  return s;
}

}  // namespace

int make_gst_block(Network& net, int input_node, int c_i, int c_o, const GstConfig& cfg,
                   int spatial_stride, const std::string& prefix, int stage, int block_index,
                   std::vector<GstBlockInfo>* info_out) {
  cfg.check_channels(c_i, c_o);
  const int c_in_path = cfg.path_in(c_i);
  const int c_out_t = cfg.temporal_out(c_o);
  const int c_out_s = cfg.spatial_out(c_o);
  const bool split = c_in_path != c_i;

  int spatial_src = input_node;
  int temporal_src = input_node;
  if (split) {
    Node sa;
    sa.kind = NodeKind::SliceChannels;
    sa.name = prefix + ".slice_s";
    sa.inputs = {input_node};
    sa.slice_begin = 0;
    sa.slice_end = c_in_path;
    sa.stage = stage;
    sa.block_index = block_index;
    spatial_src = add_node(net, std::move(sa));

    Node st;
    st.kind = NodeKind::SliceChannels;
    st.name = prefix + ".slice_t";
    st.inputs = {input_node};
    st.slice_begin = c_i - c_in_path;
    st.slice_end = c_i;
    st.stage = stage;
    st.block_index = block_index;
    temporal_src = add_node(net, std::move(st));
  }

  ConvSpec ss = spatial_conv(c_in_path, c_out_s, cfg.k_h, spatial_stride, cfg.k_h / 2);
  const int sconv = add_conv(net, spatial_src, prefix + ".spatial", ss, stage, block_index,
                             PathTag::Spatial);

  ConvSpec ts;
  ts.in_channels = c_in_path;
  ts.out_channels = c_out_t;
  ts.k_t = cfg.k_t;
  ts.k_h = cfg.k_h;
  ts.k_w = cfg.k_w;
  ts.s_h = ts.s_w = spatial_stride;
  ts.p_t = cfg.k_t / 2;
  ts.p_h = cfg.k_h / 2;
  ts.p_w = cfg.k_w / 2;
  const int tconv = add_conv(net, temporal_src, prefix + ".temporal", ts, stage, block_index,
                             PathTag::Temporal);

  Node cat;
  cat.kind = NodeKind::ConcatChannels;
  cat.name = prefix + ".concat";
  cat.inputs = {sconv, tconv};  // spatial group first, temporal second
  cat.stage = stage;
  cat.block_index = block_index;
  const int concat = add_node(net, std::move(cat));

  const int bn = add_bn(net, concat, prefix + ".bn", c_o, stage, block_index);

  GstBlockInfo info;
  info.stage = stage;
  info.block_index = block_index;
  info.bn_node = bn;
  info.spatial_channels = c_out_s;
  info.temporal_channels = c_out_t;
  info.label = prefix;
  if (info_out) info_out->push_back(info);
  return bn;
}

int make_block(Network& net, int input_node, const BlockKind& kind, int c_i, int c_o,
               int spatial_stride, const std::string& prefix, int stage, int block_index) {
  kind.validate();
  switch (kind.family) {
    case BlockFamily::C2D: {
      const ConvSpec s = spatial_conv(c_i, c_o, kind.k_h, spatial_stride, kind.k_h / 2);
      const int conv = add_conv(net, input_node, prefix, s, stage, block_index);
      return add_bn(net, conv, prefix + ".bn", c_o, stage, block_index);
    }
    case BlockFamily::C3D:
    case BlockFamily::C3DGroup: {
      ConvSpec s;
      s.in_channels = c_i;
      s.out_channels = c_o;
      s.k_t = kind.k_t;
      s.k_h = kind.k_h;
      s.k_w = kind.k_w;
      s.s_h = s.s_w = spatial_stride;
      s.p_t = kind.k_t / 2;
      s.p_h = kind.k_h / 2;
      s.p_w = kind.k_w / 2;
      s.groups = kind.family == BlockFamily::C3DGroup ? kind.groups : 1;
      const int conv = add_conv(net, input_node, prefix, s, stage, block_index);
      return add_bn(net, conv, prefix + ".bn", c_o, stage, block_index);
    }
    case BlockFamily::P3D: {
      // Cascade: spatial conv C_i->C_o, BN, ReLU, temporal conv C_o->C_o.
      const ConvSpec sp = spatial_conv(c_i, c_o, kind.k_h, spatial_stride, kind.k_h / 2);
      const int sconv = add_conv(net, input_node, prefix + ".spatial", sp, stage, block_index);
      const int mid_bn = add_bn(net, sconv, prefix + ".mid_bn", c_o, stage, block_index);
      const int mid_relu = add_simple(net, NodeKind::Relu, mid_bn, prefix + ".mid_relu", stage,
                                      block_index);
      ConvSpec tp;
      tp.in_channels = c_o;
      tp.out_channels = c_o;
      tp.k_t = kind.k_t;
      tp.p_t = kind.k_t / 2;
      const int tconv = add_conv(net, mid_relu, prefix + ".temporal", tp, stage, block_index);
      return add_bn(net, tconv, prefix + ".bn", c_o, stage, block_index);
    }
    case BlockFamily::GstLarge:
    case BlockFamily::Gst:
      return make_gst_block(net, input_node, c_i, c_o, kind.gst_config(), spatial_stride, prefix,
                            stage, block_index, &net.gst_blocks);
  }
  throw std::invalid_argument("make_block: unknown family");
}

namespace {

struct StagePlan {
  std::vector<int> blocks;  // residual blocks per stage
  std::vector<int> widths;  // bottleneck width / basic block width per stage
  bool bottleneck = false;
  int expansion = 1;
};

StagePlan plan_for(const NetworkSpec& spec) {
  StagePlan p;
  switch (spec.backbone) {
    case Backbone::ResNet50:
      p.blocks = {3, 4, 6, 3};
      p.widths = {64, 128, 256, 512};
      p.bottleneck = true;
      p.expansion = 4;
      break;
    case Backbone::ResNet18:
      p.blocks = {2, 2, 2, 2};
      p.widths = {64, 128, 256, 512};
      break;
    case Backbone::Tiny:
      for (int s = 0; s < spec.tiny_stages; ++s) {
        p.blocks.push_back(spec.tiny_blocks);
        p.widths.push_back(spec.tiny_width << s);
      }
      break;
  }
  return p;
}

// Residual block. conv_slot counts the substituted 3x3 positions so a
// bottleneck's single slot and a basic block's two slots get distinct names.
int bottleneck_block(Network& net, int input, const BlockKind& kind, int c_in, int width,
                     int stride, const std::string& base, int stage, int block_index) {
  const int c_out = 4 * width;
  const int conv1 = add_conv(net, input, base + ".conv1", spatial_conv(c_in, width, 1, 1, 0),
                             stage, block_index);
  const int bn1 = add_bn(net, conv1, base + ".bn1", width, stage, block_index);
  const int relu1 = add_simple(net, NodeKind::Relu, bn1, base + ".relu1", stage, block_index);

  const std::size_t gst_before = net.gst_blocks.size();
  const int mid = make_block(net, relu1, kind, width, width, stride, base + ".conv2", stage,
                             block_index);
  for (std::size_t i = gst_before; i < net.gst_blocks.size(); ++i) net.gst_blocks[i].conv_slot = 2;
  const int relu2 = add_simple(net, NodeKind::Relu, mid, base + ".relu2", stage, block_index);

  const int conv3 = add_conv(net, relu2, base + ".conv3", spatial_conv(width, c_out, 1, 1, 0),
                             stage, block_index);
  const int bn3 = add_bn(net, conv3, base + ".bn3", c_out, stage, block_index);

  int shortcut = input;
  if (c_in != c_out || stride != 1) {
    const int dconv = add_conv(net, input, base + ".down.conv",
                               spatial_conv(c_in, c_out, 1, stride, 0), stage, block_index);
    shortcut = add_bn(net, dconv, base + ".down.bn", c_out, stage, block_index);
  }

  Node add;
  add.kind = NodeKind::Add;
  add.name = base + ".add";
  add.inputs = {bn3, shortcut};
  add.stage = stage;
  add.block_index = block_index;
  const int sum = net.nodes.size();
  net.nodes.push_back(std::move(add));
  return add_simple(net, NodeKind::Relu, sum, base + ".relu_out", stage, block_index);
}

int basic_block(Network& net, int input, const BlockKind& kind, int c_in, int width, int stride,
                const std::string& base, int stage, int block_index) {
  const std::size_t gst1 = net.gst_blocks.size();
  const int mid1 = make_block(net, input, kind, c_in, width, stride, base + ".conv1", stage,
                              block_index);
  for (std::size_t i = gst1; i < net.gst_blocks.size(); ++i) net.gst_blocks[i].conv_slot = 1;
  const int relu1 = add_simple(net, NodeKind::Relu, mid1, base + ".relu1", stage, block_index);

  const std::size_t gst2 = net.gst_blocks.size();
  const int mid2 = make_block(net, relu1, kind, width, width, 1, base + ".conv2", stage,
                              block_index);
  for (std::size_t i = gst2; i < net.gst_blocks.size(); ++i) net.gst_blocks[i].conv_slot = 2;

  int shortcut = input;
  if (c_in != width || stride != 1) {
    const int dconv = add_conv(net, input, base + ".down.conv",
                               spatial_conv(c_in, width, 1, stride, 0), stage, block_index);
    shortcut = add_bn(net, dconv, base + ".down.bn", width, stage, block_index);
  }

  Node add;
  add.kind = NodeKind::Add;
  add.name = base + ".add";
  add.inputs = {mid2, shortcut};
  add.stage = stage;
  add.block_index = block_index;
  const int sum = net.nodes.size();
  net.nodes.push_back(std::move(add));
  return add_simple(net, NodeKind::Relu, sum, base + ".relu_out", stage, block_index);
}

}  // namespace

Network make_network(const NetworkSpec& spec) {
  spec.validate();
  Network net;
  net.spec = spec;

  Node input;
  input.kind = NodeKind::Input;
  input.name = "input";
  net.nodes.push_back(std::move(input));
  int cur = 0;

  const StagePlan plan = plan_for(spec);
  int channels;
  if (spec.backbone == Backbone::Tiny) {
    channels = plan.widths[0];
    cur = add_conv(net, cur, "stem.conv", spatial_conv(spec.in_channels, channels, 3, 1, 1), -1, -1);
    cur = add_bn(net, cur, "stem.bn", channels, -1, -1);
    cur = add_simple(net, NodeKind::Relu, cur, "stem.relu");
  } else {
    channels = 64;
    cur = add_conv(net, cur, "stem.conv", spatial_conv(spec.in_channels, channels, 7, 2, 3), -1, -1);
    cur = add_bn(net, cur, "stem.bn", channels, -1, -1);
    cur = add_simple(net, NodeKind::Relu, cur, "stem.relu");
    Node pool;
    pool.kind = NodeKind::MaxPoolSpatial;
    pool.name = "stem.pool";
    pool.inputs = {cur};
    cur = static_cast<int>(net.nodes.size());
    net.nodes.push_back(std::move(pool));
  }

  for (std::size_t s = 0; s < plan.blocks.size(); ++s) {
    const int width = plan.widths[s];
    for (int b = 0; b < plan.blocks[s]; ++b) {
      const int stride = (s > 0 && b == 0) ? 2 : 1;
      const std::string base = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      if (plan.bottleneck) {
        cur = bottleneck_block(net, cur, spec.block, channels, width, stride, base,
                               static_cast<int>(s + 1), b);
        channels = width * plan.expansion;
      } else {
        cur = basic_block(net, cur, spec.block, channels, width, stride, base,
                          static_cast<int>(s + 1), b);
        channels = width;
      }
    }
  }

  cur = add_simple(net, NodeKind::GlobalAvgPoolSpatial, cur, "head.pool");
  Node drop;
  drop.kind = NodeKind::Dropout;
  drop.name = "head.dropout";
  drop.inputs = {cur};
  drop.dropout_rate = spec.dropout;
  cur = static_cast<int>(net.nodes.size());
  net.nodes.push_back(std::move(drop));

  Node fc;
  fc.kind = NodeKind::Linear;
  fc.name = "head.fc";
  fc.inputs = {cur};
  fc.linear = LinearLayer(channels, spec.num_classes);
  net.per_frame_node = static_cast<int>(net.nodes.size());
  net.nodes.push_back(std::move(fc));

  Node avg;
  avg.kind = NodeKind::FrameAverage;
  avg.name = "head.avg";
  avg.inputs = {net.per_frame_node};
  net.output_node = static_cast<int>(net.nodes.size());
  net.nodes.push_back(std::move(avg));

  // Per-parameter seeding keyed by name: layers shared across block kinds
  // get identical initial weights for the same init_seed.
  for (Node& node : net.nodes) {
    if (node.kind == NodeKind::Conv) {
      std::mt19937_64 rng(mix_seed(spec.init_seed ^ hash_name(node.name)));
      node.conv.init_fan_in_uniform(rng);
    } else if (node.kind == NodeKind::Linear) {
      std::mt19937_64 rng(mix_seed(spec.init_seed ^ hash_name(node.name)));
      node.linear.init_fan_in_uniform(rng);
    }
  }
  return net;
}

}  // namespace gstnet
