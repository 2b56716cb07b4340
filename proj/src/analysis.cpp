#include "gstnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "gstnet/ops.hpp"

namespace gstnet {

namespace {

constexpr int kHistogramBins = 20;

GroupStats group_stats(std::vector<double> gammas) {
  GroupStats s;
  s.gammas = std::move(gammas);
  if (s.gammas.empty()) return s;
  s.mean = std::accumulate(s.gammas.begin(), s.gammas.end(), 0.0) /
           static_cast<double>(s.gammas.size());
  std::vector<double> sorted = s.gammas;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  s.median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return s;
}

std::vector<long long> histogram(const std::vector<double>& values, double lo, double hi) {
  std::vector<long long> counts(kHistogramBins, 0);
  const double span = hi - lo;
  for (double v : values) {
    int bin = span > 0.0 ? static_cast<int>((v - lo) / span * kHistogramBins) : 0;
    bin = std::clamp(bin, 0, kHistogramBins - 1);
    counts[bin] += 1;
  }
  return counts;
}

}  // namespace

std::vector<BnAttribution> extract_bn_attribution(const Network& net) {
  if (net.gst_blocks.empty()) {
    throw std::invalid_argument("bn attribution: network has no tagged spatial/temporal paths");
  }
  std::vector<BnAttribution> result;
  result.reserve(net.gst_blocks.size());
  for (const GstBlockInfo& info : net.gst_blocks) {
    const Node& bn_node = net.nodes.at(info.bn_node);
    const std::vector<double>& gamma = bn_node.bn.gamma;
    if (static_cast<int>(gamma.size()) != info.spatial_channels + info.temporal_channels) {
      throw std::invalid_argument("bn attribution: channel partition does not cover BN width");
    }

    BnAttribution attr;
    attr.stage = info.stage;
    attr.block_index = info.block_index;
    attr.conv_slot = info.conv_slot;
    attr.label = info.label;

    std::vector<double> spatial(info.spatial_channels), temporal(info.temporal_channels);
    for (int c = 0; c < info.spatial_channels; ++c) spatial[c] = std::abs(gamma[c]);
    for (int c = 0; c < info.temporal_channels; ++c) {
      temporal[c] = std::abs(gamma[info.spatial_channels + c]);
    }
    attr.spatial = group_stats(std::move(spatial));
    attr.temporal = group_stats(std::move(temporal));

    double hi = 0.0;
    for (double v : attr.spatial.gammas) hi = std::max(hi, v);
    for (double v : attr.temporal.gammas) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    attr.bin_edges.resize(kHistogramBins + 1);
    for (int b = 0; b <= kHistogramBins; ++b) {
      attr.bin_edges[b] = hi * static_cast<double>(b) / kHistogramBins;
    }
    attr.spatial_hist = histogram(attr.spatial.gammas, 0.0, hi);
    attr.temporal_hist = histogram(attr.temporal.gammas, 0.0, hi);
    result.push_back(std::move(attr));
  }
  return result;
}

std::string attribution_to_json(const std::vector<BnAttribution>& attr) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const BnAttribution& a : attr) {
    nlohmann::ordered_json b;
    b["label"] = a.label;
    b["stage"] = a.stage;
    b["block"] = a.block_index;
    b["conv_slot"] = a.conv_slot;
    b["spatial"] = {{"channels", a.spatial.gammas.size()},
                    {"mean", a.spatial.mean},
                    {"median", a.spatial.median},
                    {"gamma", a.spatial.gammas}};
    b["temporal"] = {{"channels", a.temporal.gammas.size()},
                     {"mean", a.temporal.mean},
                     {"median", a.temporal.median},
                     {"gamma", a.temporal.gammas}};
    b["histogram"] = {{"bin_edges", a.bin_edges},
                      {"spatial", a.spatial_hist},
                      {"temporal", a.temporal_hist}};
    j["blocks"].push_back(std::move(b));
  }
  return j.dump(2);
}

void write_histogram_csv(const BnAttribution& attr, std::ostream& os) {
  os << "bin_left,bin_right,spatial_count,temporal_count\n";
  for (std::size_t b = 0; b + 1 < attr.bin_edges.size(); ++b) {
    os << attr.bin_edges[b] << "," << attr.bin_edges[b + 1] << "," << attr.spatial_hist[b] << ","
       << attr.temporal_hist[b] << "\n";
  }
}

FrameTrace per_frame_trace(Network& net, const Tensor5& clip, int k) {
  if (clip.n() != 1) throw std::invalid_argument("trace: expected a single clip (N=1)");
  if (k < 1 || k > net.spec.num_classes) {
    throw std::invalid_argument("trace: k must be in [1, num_classes]");
  }
  const NetOutput out = net.forward(clip, ForwardOptions{Mode::Eval});
  const int T = out.per_frame.t();
  const int K = out.per_frame.c();

  FrameTrace trace;
  trace.frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::vector<double> logits(K);
    for (int c = 0; c < K; ++c) logits[c] = out.per_frame.at(0, c, t, 0, 0);
    const std::vector<double> probs = softmax(logits);
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    FrameEntry entry;
    entry.frame = t;
    for (int i = 0; i < k; ++i) {
      entry.top_class.push_back(order[i]);
      entry.top_score.push_back(probs[order[i]]);
    }
    trace.frames.push_back(std::move(entry));
  }

  std::vector<double> mean_logits(K);
  for (int c = 0; c < K; ++c) mean_logits[c] = out.logits.at(0, c, 0, 0, 0);
  trace.final_probs = softmax(mean_logits);
  trace.final_class = static_cast<int>(
      std::max_element(trace.final_probs.begin(), trace.final_probs.end()) -
      trace.final_probs.begin());
  trace.final_score = trace.final_probs[trace.final_class];
  return trace;
}

std::string trace_to_json(const FrameTrace& trace) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["frames"] = nlohmann::ordered_json::array();
  for (const FrameEntry& e : trace.frames) {
    j["frames"].push_back(
        {{"frame", e.frame}, {"top_class", e.top_class}, {"top_score", e.top_score}});
  }
  j["final"] = {{"class", trace.final_class},
                {"score", trace.final_score},
                {"probs", trace.final_probs}};
  return j.dump(2);
}

Tensor5 permute_frames(const Tensor5& clip, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != clip.t()) {
    throw std::invalid_argument("permute_frames: permutation length must equal T");
  }
  Tensor5 shuffled = Tensor5::zeros_like(clip);
  const std::size_t plane = static_cast<std::size_t>(clip.h()) * clip.w();
  for (int n = 0; n < clip.n(); ++n) {
    for (int c = 0; c < clip.c(); ++c) {
      for (int t = 0; t < clip.t(); ++t) {
        if (perm[t] < 0 || perm[t] >= clip.t()) {
          throw std::invalid_argument("permute_frames: index out of range");
        }
        std::copy_n(clip.data() + clip.index(n, c, perm[t], 0, 0), plane,
                    shuffled.data() + shuffled.index(n, c, t, 0, 0));
      }
    }
  }
  return shuffled;
}

double shuffle_sensitivity(Network& net, const Tensor5& clip, int trials, std::mt19937_64& rng) {
  if (clip.t() < 2) throw std::invalid_argument("shuffle: clip needs at least 2 frames");
  if (trials < 1) throw std::invalid_argument("shuffle: trials must be >= 1");

  const NetOutput base = net.forward(clip, ForwardOptions{Mode::Eval});
  const int K = base.logits.c();

  std::vector<int> perm(clip.t());
  double total = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Tensor5 shuffled = permute_frames(clip, perm);
    const NetOutput out = net.forward(shuffled, ForwardOptions{Mode::Eval});
    double l1 = 0.0;
    for (int n = 0; n < base.logits.n(); ++n) {
      for (int k = 0; k < K; ++k) {
        l1 += std::abs(out.logits.at(n, k, 0, 0, 0) - base.logits.at(n, k, 0, 0, 0));
      }
    }
    total += l1 / K;
  }
  return total / trials;
}

}  // namespace gstnet
