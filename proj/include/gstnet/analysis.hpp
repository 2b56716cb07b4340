#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "gstnet/network.hpp"

namespace gstnet {

struct GroupStats {
  std::vector<double> gammas;  // |gamma| per channel of the group
  double mean = 0.0;
  double median = 0.0;
};

// Per spatial-temporal module: the following BN's |gamma| values split by
// channel group, with a shared-bin histogram for the two groups.
struct BnAttribution {
  int stage = -1;
  int block_index = -1;
  int conv_slot = 0;
  std::string label;
  GroupStats spatial;
  GroupStats temporal;
  std::vector<double> bin_edges;         // 21 edges over [0, max|gamma|]
  std::vector<long long> spatial_hist;   // 20 bins
  std::vector<long long> temporal_hist;  // 20 bins
};

// Throws std::invalid_argument when the network has no tagged parallel paths.
std::vector<BnAttribution> extract_bn_attribution(const Network& net);

std::string attribution_to_json(const std::vector<BnAttribution>& attr);
void write_histogram_csv(const BnAttribution& attr, std::ostream& os);

struct FrameEntry {
  int frame = 0;
  std::vector<int> top_class;     // descending by score
  std::vector<double> top_score;
};

struct FrameTrace {
  std::vector<FrameEntry> frames;
  int final_class = 0;
  double final_score = 0.0;
  std::vector<double> final_probs;  // softmax of the averaged logits
};

// Per-frame softmax of the per-frame logits of a single clip (eval mode).
FrameTrace per_frame_trace(Network& net, const Tensor5& clip, int k);

std::string trace_to_json(const FrameTrace& trace);

// Reorders the frame axis: output frame t is input frame perm[t].
Tensor5 permute_frames(const Tensor5& clip, const std::vector<int>& perm);

// Mean over random frame permutations of |logits(perm(clip)) - logits(clip)|_1 / K.
double shuffle_sensitivity(Network& net, const Tensor5& clip, int trials, std::mt19937_64& rng);

}  // namespace gstnet
