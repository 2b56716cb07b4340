#include "gstnet/sampler.hpp"

#include <stdexcept>

namespace gstnet {

std::vector<int> sample_segments(int total_frames, int k_segments, Mode mode,
                                 std::mt19937_64& rng) {
  if (total_frames < 1) throw std::invalid_argument("sampler: total_frames must be >= 1");
  if (k_segments < 1) throw std::invalid_argument("sampler: k_segments must be >= 1");

  std::vector<int> indices(k_segments);
  if (total_frames < k_segments) {
    for (int i = 0; i < k_segments; ++i) {
      indices[i] = static_cast<int>(static_cast<long long>(i) * total_frames / k_segments);
    }
    return indices;
  }
  for (int i = 0; i < k_segments; ++i) {
    const int start = static_cast<int>(static_cast<long long>(i) * total_frames / k_segments);
    const int end = static_cast<int>(static_cast<long long>(i + 1) * total_frames / k_segments);
    if (mode == Mode::Train) {
      std::uniform_int_distribution<int> dist(start, end - 1);
      indices[i] = dist(rng);
    } else {
      indices[i] = (start + end - 1) / 2;  // lower middle
    }
  }
  return indices;
}

Tensor5 gather_frames(const Tensor5& clip, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("gather_frames: empty index list");
  Tensor5 out(clip.n(), clip.c(), static_cast<int>(indices.size()), clip.h(), clip.w());
  const std::size_t plane = static_cast<std::size_t>(clip.h()) * clip.w();
  for (int n = 0; n < clip.n(); ++n) {
    for (int c = 0; c < clip.c(); ++c) {
      for (std::size_t k = 0; k < indices.size(); ++k) {
        const int t = indices[k];
        if (t < 0 || t >= clip.t()) throw std::invalid_argument("gather_frames: index out of range");
        std::copy_n(clip.data() + clip.index(n, c, t, 0, 0), plane,
                    out.data() + out.index(n, c, static_cast<int>(k), 0, 0));
      }
    }
  }
  return out;
}

}  // namespace gstnet
