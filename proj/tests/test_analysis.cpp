#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <sstream>

#include "gstnet/analysis.hpp"
#include "gstnet/synthetic.hpp"

using namespace gstnet;

namespace {

NetworkSpec tiny_spec(const BlockKind& kind) {
  NetworkSpec spec;
  spec.backbone = Backbone::Tiny;
  spec.block = kind;
  spec.num_classes = 4;
  spec.in_channels = 1;
  spec.frames = 4;
  spec.height = spec.width = 16;
  spec.tiny_stages = 2;
  spec.tiny_width = 8;
  spec.dropout = 0.0;
  return spec;
}

}  // namespace

TEST_CASE("fresh network attribution has one occupied bin per group") {
  Network net = make_network(tiny_spec(BlockKind::gst(Rational{1, 4})));
  const auto attributions = extract_bn_attribution(net);
  REQUIRE(attributions.size() == net.gst_blocks.size());
  for (const BnAttribution& a : attributions) {
    CHECK(std::accumulate(a.spatial_hist.begin(), a.spatial_hist.end(), 0LL) ==
          static_cast<long long>(a.spatial.gammas.size()));
    CHECK(std::accumulate(a.temporal_hist.begin(), a.temporal_hist.end(), 0LL) ==
          static_cast<long long>(a.temporal.gammas.size()));
    int occupied_s = 0, occupied_t = 0;
    for (std::size_t b = 0; b < a.spatial_hist.size(); ++b) {
      occupied_s += a.spatial_hist[b] > 0 ? 1 : 0;
      occupied_t += a.temporal_hist[b] > 0 ? 1 : 0;
      // gamma = 1 everywhere: same bin for both groups
      if (a.spatial_hist[b] > 0) CHECK(a.temporal_hist[b] > 0);
    }
    CHECK(occupied_s == 1);
    CHECK(occupied_t == 1);
    CHECK(a.spatial.mean == doctest::Approx(1.0));
    CHECK(a.temporal.mean == doctest::Approx(1.0));
    CHECK(a.bin_edges.size() == 21);
    CHECK(a.bin_edges.front() == 0.0);
  }
}

TEST_CASE("attribution splits gamma by the constructor ranges") {
  Network net = make_network(tiny_spec(BlockKind::gst(Rational{1, 4})));
  for (const GstBlockInfo& info : net.gst_blocks) {
    BnLayer& bn = net.nodes[info.bn_node].bn;
    for (int c = 0; c < info.spatial_channels; ++c) bn.gamma[c] = -0.5;
    for (int c = 0; c < info.temporal_channels; ++c) bn.gamma[info.spatial_channels + c] = 2.0;
  }
  for (const BnAttribution& a : extract_bn_attribution(net)) {
    CHECK(a.spatial.mean == doctest::Approx(0.5));  // |gamma|
    CHECK(a.temporal.mean == doctest::Approx(2.0));
    CHECK(a.spatial.median == doctest::Approx(0.5));
    CHECK(a.temporal.median == doctest::Approx(2.0));
  }
}

TEST_CASE("attribution covers every gst block with exact channel ranges") {
  for (const BlockKind& kind :
       {BlockKind::gst(Rational{1, 4}), BlockKind::gst(Rational{1, 2}),
        BlockKind::gst_large(Rational{1, 4})}) {
    Network net = make_network(tiny_spec(kind));
    CHECK(net.gst_blocks.size() == 4u);  // 2 stages x 1 block x 2 substituted convs
    for (const GstBlockInfo& info : net.gst_blocks) {
      const Node& bn = net.nodes[info.bn_node];
      REQUIRE(bn.kind == NodeKind::BatchNorm);
      CHECK(info.spatial_channels + info.temporal_channels == bn.bn.channels);
      const GstConfig cfg = kind.gst_config();
      CHECK(info.temporal_channels == cfg.temporal_out(bn.bn.channels));
      // the concat feeding this BN puts the spatial path first
      const Node& cat = net.nodes[bn.inputs[0]];
      REQUIRE(cat.kind == NodeKind::ConcatChannels);
      CHECK(net.nodes[cat.inputs[0]].path == PathTag::Spatial);
      CHECK(net.nodes[cat.inputs[0]].conv.spec.out_channels == info.spatial_channels);
      CHECK(net.nodes[cat.inputs[1]].path == PathTag::Temporal);
      CHECK(net.nodes[cat.inputs[1]].conv.spec.out_channels == info.temporal_channels);
    }
  }
}

TEST_CASE("attribution requires tagged paths") {
  Network net = make_network(tiny_spec(BlockKind::c2d()));
  CHECK_THROWS_AS(extract_bn_attribution(net), std::invalid_argument);
}

TEST_CASE("per-frame trace is constant on a constant clip") {
  // k_t = 1 everywhere: frames are processed independently, so a constant
  // clip yields identical traces (a temporal kernel would see its own zero
  // padding at the clip edges).
  Network net = make_network(tiny_spec(BlockKind::c2d()));
  Tensor5 clip(1, 1, 4, 16, 16);
  clip.fill(0.3);
  const FrameTrace trace = per_frame_trace(net, clip, 4);
  REQUIRE(trace.frames.size() == 4);
  for (const FrameEntry& e : trace.frames) {
    CHECK(e.top_class == trace.frames[0].top_class);
    for (std::size_t i = 0; i < e.top_score.size(); ++i) {
      CHECK(e.top_score[i] == trace.frames[0].top_score[i]);
    }
    // k = num classes: scores sum to 1
    CHECK(std::accumulate(e.top_score.begin(), e.top_score.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // descending
    for (std::size_t i = 1; i < e.top_score.size(); ++i) {
      CHECK(e.top_score[i] <= e.top_score[i - 1]);
    }
  }
  CHECK(trace.final_class == trace.frames[0].top_class[0]);
  CHECK_THROWS_AS(per_frame_trace(net, clip, 5), std::invalid_argument);

  // final prediction reproducible from per-frame logits by averaging,
  // for the temporal variant too
  Network gst = make_network(tiny_spec(BlockKind::gst(Rational{1, 4})));
  const FrameTrace gtrace = per_frame_trace(gst, clip, 4);
  const NetOutput out = gst.forward(clip, ForwardOptions{Mode::Eval});
  std::vector<double> mean(4, 0.0);
  for (int k = 0; k < 4; ++k) {
    for (int t = 0; t < 4; ++t) mean[k] += out.per_frame_logit(0, t, k) / 4.0;
  }
  const std::vector<double> probs = softmax(mean);
  for (int k = 0; k < 4; ++k) {
    CHECK(gtrace.final_probs[k] == doctest::Approx(probs[k]).epsilon(1e-12));
  }
}

TEST_CASE("identity permutation changes nothing") {
  Network net = make_network(tiny_spec(BlockKind::gst(Rational{1, 4})));
  SyntheticSpec sspec;
  sspec.height = sspec.width = 16;
  sspec.clip_frames = 4;
  sspec.square = 4;
  sspec.step = 2;
  const Tensor5 clip = render_clip(sspec, MotionClass::LeftRight);

  std::vector<int> identity(clip.t());
  std::iota(identity.begin(), identity.end(), 0);
  const Tensor5 same = permute_frames(clip, identity);
  const NetOutput a = net.forward(clip, ForwardOptions{Mode::Eval});
  const NetOutput b = net.forward(same, ForwardOptions{Mode::Eval});
  for (std::size_t i = 0; i < a.logits.size(); ++i) CHECK(a.logits.data()[i] == b.logits.data()[i]);
}

TEST_CASE("shuffle sensitivity separates c2d from gst") {
  NetworkSpec c2d_spec = tiny_spec(BlockKind::c2d());
  c2d_spec.init_seed = 21;
  Network c2d = make_network(c2d_spec);
  NetworkSpec gst_spec = tiny_spec(BlockKind::gst(Rational{1, 4}));
  gst_spec.init_seed = 21;
  Network gst = make_network(gst_spec);

  SyntheticSpec sspec;
  sspec.height = sspec.width = 16;
  sspec.clip_frames = 4;
  sspec.square = 4;
  sspec.step = 2;
  const Tensor5 clip = render_clip(sspec, MotionClass::LeftRight);

  std::mt19937_64 rng(6);
  CHECK(shuffle_sensitivity(c2d, clip, 8, rng) == 0.0);
  CHECK(shuffle_sensitivity(gst, clip, 8, rng) > 1e-6);

  // a gst block whose temporal kernel is collapsed to k_t=1 is spatial-only
  NetworkSpec flat_spec = tiny_spec(BlockKind::gst(Rational{1, 4}));
  flat_spec.block.k_t = 1;
  Network flat = make_network(flat_spec);
  CHECK(shuffle_sensitivity(flat, clip, 8, rng) == 0.0);

  Tensor5 single(1, 1, 1, 16, 16);
  CHECK_THROWS_AS(shuffle_sensitivity(gst, single, 4, rng), std::invalid_argument);
}

TEST_CASE("serializations carry the documented fields") {
  Network net = make_network(tiny_spec(BlockKind::gst(Rational{1, 4})));
  const auto attributions = extract_bn_attribution(net);
  const std::string json = attribution_to_json(attributions);
  CHECK(json.find("\"schema_version\"") != std::string::npos);
  CHECK(json.find("\"spatial\"") != std::string::npos);
  CHECK(json.find("\"temporal\"") != std::string::npos);
  CHECK(json.find("\"bin_edges\"") != std::string::npos);

  std::ostringstream csv;
  write_histogram_csv(attributions[0], csv);
  CHECK(csv.str().rfind("bin_left,bin_right,spatial_count,temporal_count\n", 0) == 0);

  Tensor5 clip(1, 1, 4, 16, 16);
  clip.fill(0.1);
  const FrameTrace trace = per_frame_trace(net, clip, 2);
  const std::string tjson = trace_to_json(trace);
  CHECK(tjson.find("\"frames\"") != std::string::npos);
  CHECK(tjson.find("\"final\"") != std::string::npos);
}
