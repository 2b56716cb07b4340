#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstnet/tensor.hpp"

namespace gstnet {

// The registered motion programs. LeftRight and RightLeft form an
// order-contrastive pair: identical frame sets, reversed order.
enum class MotionClass { LeftRight, RightLeft, StaticTop, StaticBottom };

std::string motion_class_name(MotionClass c);
MotionClass parse_motion_class(const std::string& text);

struct SyntheticSpec {
  int height = 32;
  int width = 32;
  int clip_frames = 8;
  std::vector<MotionClass> classes{MotionClass::LeftRight, MotionClass::RightLeft,
                                   MotionClass::StaticTop, MotionClass::StaticBottom};
  int clips_per_class = 32;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  int square = 6;  // square side in pixels
  int step = 3;    // horizontal motion per frame

  void validate() const;  // requires at least one order-contrastive pair
};

struct Sample {
  Tensor5 clip;  // 1 x 1 x clip_frames x H x W
  int label;     // index into spec.classes
};

using Dataset = std::vector<Sample>;

// Deterministic given the seed; pixel noise N(0, sigma^2) independent per frame.
Dataset gen_synthetic(const SyntheticSpec& spec);

// The noise-free clip for one class (used by tests and the analyze command).
Tensor5 render_clip(const SyntheticSpec& spec, MotionClass c);

}  // namespace gstnet
