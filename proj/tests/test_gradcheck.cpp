#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gstnet/gradcheck.hpp"
#include "gstnet/network.hpp"
#include "gstnet/ops.hpp"

using namespace gstnet;

TEST_CASE("linear map agrees exactly") {
  std::vector<double> theta{0.5, -1.25, 2.0};
  std::vector<double> grad{3.0, 3.0, 3.0};
  const auto loss = [&]() { return 3.0 * (theta[0] + theta[1] + theta[2]); };
  const auto grads = [&]() {};
  GradCheckOptions opt;
  opt.step = 0.5;  // binary-exact step: difference quotient has no rounding
  const auto reports = finite_diff_check(loss, grads, {{"theta", &theta, &grad}}, opt);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].pass);
  CHECK(reports[0].max_rel_err <= 1e-12);

  // default step on the same map still passes at the configured tolerance
  const auto loose = finite_diff_check(loss, grads, {{"theta", &theta, &grad}});
  CHECK(loose[0].pass);
}

TEST_CASE("a corrupted gradient fails the check") {
  std::vector<double> theta{1.5};
  std::vector<double> grad{2.0 * 1.5 * 1.01};  // analytic 2*theta, off by 1%
  const auto loss = [&]() { return theta[0] * theta[0]; };
  const auto reports = finite_diff_check(loss, [] {}, {{"theta", &theta, &grad}});
  REQUIRE(reports.size() == 1);
  CHECK_FALSE(reports[0].pass);
}

TEST_CASE("non-finite losses are reported") {
  std::vector<double> theta{0.0};
  std::vector<double> grad{0.0};
  const auto loss = [&]() { return 1.0 / theta[0]; };
  CHECK_THROWS_AS(finite_diff_check(loss, [] {}, {{"theta", &theta, &grad}}),
                  std::runtime_error);
}

TEST_CASE("step must be positive") {
  std::vector<double> theta{1.0};
  std::vector<double> grad{1.0};
  GradCheckOptions opt;
  opt.step = 0.0;
  CHECK_THROWS_AS(finite_diff_check([&]() { return theta[0]; }, [] {},
                                    {{"theta", &theta, &grad}}, opt),
                  std::invalid_argument);
}

namespace {

// Micro network: one GST block plus the frame-average head, so every
// parameter block of the module gets exercised end to end.
struct GstHarness {
  Network net;
  Tensor5 input;
  std::vector<int> labels;

  GstHarness(int c_i, int c_o, const GstConfig& cfg, const std::array<int, 5>& in_shape,
             std::uint64_t seed)
      : input(in_shape) {
    Node in;
    in.kind = NodeKind::Input;
    in.name = "input";
    net.nodes.push_back(std::move(in));
    const int block = make_gst_block(net, 0, c_i, c_o, cfg, 1, "gst", 0, 0, &net.gst_blocks);
    const int relu = [&] {
      Node n;
      n.kind = NodeKind::Relu;
      n.name = "relu";
      n.inputs = {block};
      net.nodes.push_back(std::move(n));
      return static_cast<int>(net.nodes.size()) - 1;
    }();
    const int pool = [&] {
      Node n;
      n.kind = NodeKind::GlobalAvgPoolSpatial;
      n.name = "pool";
      n.inputs = {relu};
      net.nodes.push_back(std::move(n));
      return static_cast<int>(net.nodes.size()) - 1;
    }();
    Node fc;
    fc.kind = NodeKind::Linear;
    fc.name = "fc";
    fc.inputs = {pool};
    fc.linear = LinearLayer(c_o, 3);
    net.per_frame_node = static_cast<int>(net.nodes.size());
    net.nodes.push_back(std::move(fc));
    Node avg;
    avg.kind = NodeKind::FrameAverage;
    avg.name = "avg";
    avg.inputs = {net.per_frame_node};
    net.output_node = static_cast<int>(net.nodes.size());
    net.nodes.push_back(std::move(avg));

    std::mt19937_64 rng(seed);
    for (Node& node : net.nodes) {
      if (node.kind == NodeKind::Conv) node.conv.init_fan_in_uniform(rng);
      if (node.kind == NodeKind::Linear) node.linear.init_fan_in_uniform(rng);
    }
    input.fill_uniform(rng, -1.0, 1.0);
    labels.assign(in_shape[0], 1);
  }

  double loss() {
    const auto stats = net.save_bn_stats();
    ForwardOptions opts;
    opts.mode = Mode::Train;
    const NetOutput out = net.forward(input, opts);
    net.restore_bn_stats(stats);
    return softmax_cross_entropy(out.logits, labels);
  }

  void grads() {
    const auto stats = net.save_bn_stats();
    ForwardCache cache;
    ForwardOptions opts;
    opts.mode = Mode::Train;
    const NetOutput out = net.forward(input, opts, &cache);
    Tensor5 grad_logits;
    softmax_cross_entropy(out.logits, labels, &grad_logits);
    net.zero_grad();
    net.backward(cache, grad_logits);
    net.restore_bn_stats(stats);
  }
};

}  // namespace

TEST_CASE("full gst block passes finite differences on every parameter block") {
  GstConfig cfg;
  cfg.alpha = Rational{1, 4};
  cfg.beta = Rational{1, 2};
  GstHarness h(8, 8, cfg, {1, 8, 4, 6, 6}, 99);

  std::vector<ParamBlock> blocks;
  h.net.for_each_param([&](const std::string& name, std::vector<double>& v, std::vector<double>& g) {
    blocks.push_back({name, &v, &g});
  });
  REQUIRE(blocks.size() >= 6);  // two convs, bn gamma/shift, linear w/b

  GradCheckOptions opt;
  opt.max_elements_per_block = 30;
  opt.seed = 5;
  const auto reports =
      finite_diff_check([&]() { return h.loss(); }, [&]() { h.grads(); }, blocks, opt);
  for (const auto& r : reports) {
    INFO(r.param, " rel err ", r.max_rel_err);
    CHECK(r.pass);
  }
}
