#pragma once

#include <random>
#include <vector>

#include "gstnet/batchnorm.hpp"  // Mode
#include "gstnet/tensor.hpp"

namespace gstnet {

// TSN-style sparse sampling: the clip is divided into k near-equal
// contiguous segments; train mode draws one uniformly random index per
// segment, eval mode takes each segment's middle index (lower middle for
// even-length segments). Clips shorter than k fall back to
// index_i = floor(i * total / k). Indices are non-decreasing.
std::vector<int> sample_segments(int total_frames, int k_segments, Mode mode,
                                 std::mt19937_64& rng);

// Gathers the selected frames of a clip along T.
Tensor5 gather_frames(const Tensor5& clip, const std::vector<int>& indices);

}  // namespace gstnet
