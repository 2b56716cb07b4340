// Command-line front end: block/network construction, cost analysis,
// gradient checking, synthetic training, and checkpoint diagnostics.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gstnet/analysis.hpp"
#include "gstnet/checkpoint.hpp"
#include "gstnet/cost_model.hpp"
#include "gstnet/gradcheck.hpp"
#include "gstnet/network.hpp"
#include "gstnet/ops.hpp"
#include "gstnet/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

namespace fs = std::filesystem;

// --output is resolved against GSTNET_OUTPUT_DIR when it is a relative path.
fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* base = std::getenv("GSTNET_OUTPUT_DIR")) {
      return fs::path(base) / p;
    }
  }
  return p;
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  const fs::path path = resolve_output(output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

struct ModelFlags {
  std::string backbone = "resnet50";
  std::string block = "gst";
  std::string alpha = "1/4";
  std::string beta = "1/2";
  int groups = 2;
  int classes = 174;
  int frames = 8;
  int size = 224;
  int channels = 3;
  int stages = 2;
  int width = 16;
  int blocks = 1;
  double dropout = 0.3;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, bool with_shape = true) {
    cmd->add_option("--backbone", backbone, "resnet18 | resnet50 | tiny")
        ->check(CLI::IsMember({"resnet18", "resnet50", "tiny"}));
    cmd->add_option("--block", block, "c2d | c3d | c3dg | p3d | gst | gst_large");
    cmd->add_option("--alpha", alpha, "temporal output-channel proportion, e.g. 1/4 or 0.25");
    cmd->add_option("--beta", beta, "input-channel split, 1 or 1/2");
    cmd->add_option("--groups", groups, "groups for c3dg");
    cmd->add_option("--classes", classes, "number of classes");
    if (with_shape) {
      cmd->add_option("--frames", frames, "input frames");
      cmd->add_option("--size", size, "input height and width");
      cmd->add_option("--channels", channels, "input channels");
    }
    cmd->add_option("--stages", stages, "tiny backbone: stages");
    cmd->add_option("--width", width, "tiny backbone: first-stage width");
    cmd->add_option("--blocks-per-stage", blocks, "tiny backbone: blocks per stage");
    cmd->add_option("--seed", seed, "weight init seed");
  }

  gstnet::BlockKind block_kind() const {
    gstnet::BlockKind kind = gstnet::parse_block_kind(block);
    if (kind.family == gstnet::BlockFamily::Gst) {
      kind.alpha = gstnet::Rational::parse(alpha);
      kind.beta = gstnet::Rational::parse(beta);
    } else if (kind.family == gstnet::BlockFamily::GstLarge) {
      kind.alpha = gstnet::Rational::parse(alpha);
      kind.beta = gstnet::Rational{1, 1};
    } else if (kind.family == gstnet::BlockFamily::C3DGroup) {
      kind.groups = groups;
    }
    return kind;
  }

  gstnet::NetworkSpec network_spec() const {
    gstnet::NetworkSpec spec;
    spec.backbone = gstnet::parse_backbone(backbone);
    spec.block = block_kind();
    spec.num_classes = classes;
    spec.frames = frames;
    spec.height = spec.width = size;
    spec.in_channels = channels;
    spec.tiny_stages = stages;
    spec.tiny_width = width;
    spec.tiny_blocks = blocks;
    spec.dropout = dropout;
    spec.init_seed = seed;
    return spec;
  }
};

int cmd_count(const ModelFlags& flags, const std::string& format, const std::string& output,
              bool macs) {
  gstnet::Network net = gstnet::make_network(flags.network_spec());
  const gstnet::CostReport report =
      macs ? gstnet::count_macs(net, {1, flags.channels, flags.frames, flags.size, flags.size})
           : gstnet::count_params(net);
  if (format == "csv") {
    std::ostringstream os;
    report.write_csv(os);
    emit(os.str(), output);
  } else {
    emit(report.to_json(), output);
  }
  return kExitOk;
}

int cmd_compare(const ModelFlags& flags, const std::string& blocks_csv, const std::string& format,
                const std::string& output) {
  std::vector<gstnet::NetworkSpec> specs;
  std::stringstream ss(blocks_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    gstnet::NetworkSpec spec = flags.network_spec();
    spec.block = gstnet::parse_block_kind(item);
    specs.push_back(spec);
  }
  const auto rows =
      gstnet::compare(specs, {1, flags.channels, flags.frames, flags.size, flags.size});
  if (format == "csv") {
    std::ostringstream os;
    gstnet::write_compare_csv(rows, os);
    emit(os.str(), output);
  } else {
    emit(gstnet::compare_to_json(rows), output);
  }
  return kExitOk;
}

int cmd_gradcheck(const ModelFlags& flags, double tol, double step, int samples,
                  const std::string& output) {
  gstnet::NetworkSpec spec = flags.network_spec();
  spec.backbone = gstnet::Backbone::Tiny;
  spec.dropout = 0.0;
  spec.num_classes = 3;
  spec.in_channels = flags.width;
  gstnet::Network net = gstnet::make_network(spec);

  std::mt19937_64 rng(gstnet::mix_seed(flags.seed));
  gstnet::Tensor5 input(1, spec.in_channels, 4, 8, 8);
  input.fill_uniform(rng, -1.0, 1.0);
  const std::vector<int> labels{1};

  const auto loss = [&]() {
    const auto stats = net.save_bn_stats();
    gstnet::ForwardOptions opts;
    opts.mode = gstnet::Mode::Train;
    const gstnet::NetOutput out = net.forward(input, opts);
    net.restore_bn_stats(stats);
    return gstnet::softmax_cross_entropy(out.logits, labels);
  };
  const auto grads = [&]() {
    const auto stats = net.save_bn_stats();
    gstnet::ForwardCache cache;
    gstnet::ForwardOptions opts;
    opts.mode = gstnet::Mode::Train;
    const gstnet::NetOutput out = net.forward(input, opts, &cache);
    gstnet::Tensor5 grad_logits;
    gstnet::softmax_cross_entropy(out.logits, labels, &grad_logits);
    net.zero_grad();
    net.backward(cache, grad_logits);
    net.restore_bn_stats(stats);
  };

  std::vector<gstnet::ParamBlock> blocks;
  net.for_each_param(
      [&](const std::string& name, std::vector<double>& v, std::vector<double>& g) {
        blocks.push_back({name, &v, &g});
      });

  gstnet::GradCheckOptions opt;
  opt.tol = tol;
  opt.step = step;
  opt.max_elements_per_block = samples;
  opt.seed = flags.seed;
  const auto reports = gstnet::finite_diff_check(loss, grads, blocks, opt);

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["block"] = spec.block.label();
  j["tolerance"] = tol;
  j["step"] = step;
  j["checks"] = nlohmann::ordered_json::array();
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.pass;
    j["checks"].push_back({{"param", r.param},
                           {"max_abs_err", r.max_abs_err},
                           {"max_rel_err", r.max_rel_err},
                           {"pass", r.pass}});
  }
  j["all_pass"] = ok;
  emit(j.dump(2), output);
  return ok ? kExitOk : kExitNumerical;
}

int cmd_train(const ModelFlags& flags, gstnet::TrainConfig cfg, double noise, int clips,
              int eval_clips, int clip_frames, const std::string& out_dir) {
  gstnet::SyntheticSpec data_spec;
  data_spec.height = data_spec.width = flags.size;
  data_spec.clip_frames = clip_frames;
  data_spec.noise_sigma = noise;
  data_spec.seed = cfg.seed;
  data_spec.clips_per_class = clips;
  const gstnet::Dataset train_set = gstnet::gen_synthetic(data_spec);
  data_spec.seed = cfg.seed + 1;
  data_spec.clips_per_class = eval_clips;
  const gstnet::Dataset eval_set = gstnet::gen_synthetic(data_spec);

  gstnet::NetworkSpec spec = flags.network_spec();
  spec.num_classes = static_cast<int>(data_spec.classes.size());
  spec.in_channels = 1;  // synthetic clips are single-channel
  spec.frames = cfg.segments;
  gstnet::Network net = gstnet::make_network(spec);

  const gstnet::TrainHistory history = gstnet::train(net, train_set, eval_set, cfg);
  const gstnet::EvalResult final_eval = gstnet::evaluate(net, eval_set, cfg.segments);

  const fs::path dir = resolve_output(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "history.csv", std::ios::binary | std::ios::trunc);
    history.write_csv(os);
  }
  gstnet::save_checkpoint(net, dir / "checkpoint");

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["block"] = spec.block.label();
  j["epochs"] = cfg.epochs;
  j["final_train_loss"] = history.epochs.empty() ? 0.0 : history.epochs.back().train_loss;
  j["eval_accuracy"] = final_eval.accuracy;
  j["per_class_accuracy"] = final_eval.per_class_accuracy;
  j["checkpoint"] = (dir / "checkpoint").string();
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_analyze(const std::string& checkpoint, const std::string& what, const std::string& clip_name,
                int topk, int trials, std::uint64_t seed, const std::string& output,
                const std::string& hist_dir) {
  gstnet::Network net = gstnet::load_checkpoint(checkpoint);

  gstnet::SyntheticSpec data_spec;
  data_spec.height = net.spec.height;
  data_spec.width = net.spec.width;
  data_spec.clip_frames = std::max(2, net.spec.frames);
  const gstnet::Tensor5 clip =
      gstnet::render_clip(data_spec, gstnet::parse_motion_class(clip_name));

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  if (what == "bn" || what == "all") {
    const auto attributions = gstnet::extract_bn_attribution(net);
    j["bn_attribution"] = nlohmann::json::parse(gstnet::attribution_to_json(attributions));
    if (!hist_dir.empty()) {
      const fs::path dir = resolve_output(hist_dir);
      fs::create_directories(dir);
      for (const gstnet::BnAttribution& a : attributions) {
        std::ostringstream name;
        name << "bn_hist_stage" << a.stage << "_block" << a.block_index << "_conv" << a.conv_slot
             << ".csv";
        std::ofstream os(dir / name.str(), std::ios::binary | std::ios::trunc);
        gstnet::write_histogram_csv(a, os);
      }
    }
  }
  if (what == "trace" || what == "all") {
    const gstnet::FrameTrace trace =
        gstnet::per_frame_trace(net, clip, std::min(topk, net.spec.num_classes));
    j["frame_trace"] = nlohmann::json::parse(gstnet::trace_to_json(trace));
    j["frame_trace"]["clip"] = clip_name;
  }
  if (what == "shuffle" || what == "all") {
    std::mt19937_64 rng(gstnet::mix_seed(seed));
    j["shuffle_sensitivity"] = gstnet::shuffle_sensitivity(net, clip, trials, rng);
  }
  emit(j.dump(2), output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouped spatial-temporal block toolkit"};
  app.require_subcommand(1);

  ModelFlags flags;
  std::string format = "json";
  std::string output;

  auto* count = app.add_subcommand("count", "parameter counts for a network");
  flags.attach(count);
  count->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  count->add_option("--output", output, "write report here instead of stdout");

  auto* flops = app.add_subcommand("flops", "multiply-accumulate counts for a network");
  ModelFlags flop_flags;
  std::string flop_format = "json", flop_output;
  flop_flags.attach(flops);
  flops->add_option("--format", flop_format)->check(CLI::IsMember({"json", "csv"}));
  flops->add_option("--output", flop_output);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check on a truncated network");
  ModelFlags grad_flags;
  grad_flags.block = "gst";
  double tol = 1e-4, step = 1e-5;
  int samples = 25;
  std::string grad_output;
  grad_flags.attach(grad, false);
  grad->add_option("--tol", tol, "max relative error");
  grad->add_option("--step", step, "central difference step");
  grad->add_option("--samples", samples, "elements sampled per parameter block");
  grad->add_option("--output", grad_output);

  auto* train_cmd = app.add_subcommand("train", "train a tiny network on the synthetic task");
  ModelFlags train_flags;
  train_flags.backbone = "tiny";
  train_flags.size = 32;
  gstnet::TrainConfig train_cfg;
  double noise = 0.05;
  int clips = 32, eval_clips = 8, clip_frames = 8;
  std::string train_out = "run";
  train_flags.attach(train_cmd, false);
  train_cmd->add_option("--size", train_flags.size, "frame height and width");
  train_cmd->add_option("--epochs", train_cfg.epochs);
  train_cmd->add_option("--batch", train_cfg.batch_size);
  train_cmd->add_option("--lr", train_cfg.lr);
  train_cmd->add_option("--momentum", train_cfg.momentum);
  train_cmd->add_option("--weight-decay", train_cfg.weight_decay);
  train_cmd->add_option("--milestones", train_cfg.milestones, "epochs at which lr decays");
  train_cmd->add_option("--dropout", train_flags.dropout);
  train_cmd->add_option("--segments", train_cfg.segments);
  train_cmd->add_option("--train-seed", train_cfg.seed);
  train_cmd->add_option("--noise", noise, "pixel noise sigma");
  train_cmd->add_option("--clips", clips, "training clips per class");
  train_cmd->add_option("--eval-clips", eval_clips, "evaluation clips per class");
  train_cmd->add_option("--clip-frames", clip_frames, "frames stored per clip");
  train_cmd->add_option("--out", train_out, "output directory");

  auto* analyze = app.add_subcommand("analyze", "diagnostics over a trained checkpoint");
  std::string checkpoint, what = "all", clip_name = "left_right", analyze_output, hist_dir;
  int topk = 3, trials = 8;
  std::uint64_t analyze_seed = 1;
  analyze->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  analyze->add_option("--report", what)->check(CLI::IsMember({"bn", "trace", "shuffle", "all"}));
  analyze->add_option("--clip", clip_name,
                      "left_right | right_left | static_top | static_bottom");
  analyze->add_option("--topk", topk);
  analyze->add_option("--trials", trials);
  analyze->add_option("--seed", analyze_seed);
  analyze->add_option("--output", analyze_output);
  analyze->add_option("--hist-dir", hist_dir, "also write per-block histogram csv files here");

  auto* cmp = app.add_subcommand("compare", "cost table over a list of block kinds");
  ModelFlags cmp_flags;
  std::string blocks_csv = "c2d,c3d,c3dg:2,p3d,gst_large:1/4,gst:1/2,gst:1/4,gst:1/8";
  std::string cmp_format = "csv", cmp_output;
  cmp_flags.attach(cmp);
  cmp->add_option("--blocks", blocks_csv, "comma-separated block kinds");
  cmp->add_option("--format", cmp_format)->check(CLI::IsMember({"json", "csv"}));
  cmp->add_option("--output", cmp_output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (count->parsed()) return cmd_count(flags, format, output, false);
    if (flops->parsed()) return cmd_count(flop_flags, flop_format, flop_output, true);
    if (grad->parsed()) return cmd_gradcheck(grad_flags, tol, step, samples, grad_output);
    if (train_cmd->parsed()) {
      return cmd_train(train_flags, train_cfg, noise, clips, eval_clips, clip_frames, train_out);
    }
    if (analyze->parsed()) {
      return cmd_analyze(checkpoint, what, clip_name, topk, trials, analyze_seed, analyze_output,
                         hist_dir);
    }
    if (cmp->parsed()) return cmd_compare(cmp_flags, blocks_csv, cmp_format, cmp_output);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const std::string msg = e.what();
    return msg.find("non-finite") != std::string::npos ? kExitNumerical : kExitUsage;
  }
  return kExitUsage;
}
