#include "gstnet/synthetic.hpp"

#include <algorithm>
#include <stdexcept>

namespace gstnet {

std::string motion_class_name(MotionClass c) {
  switch (c) {
    case MotionClass::LeftRight: return "left_right";
    case MotionClass::RightLeft: return "right_left";
    case MotionClass::StaticTop: return "static_top";
    case MotionClass::StaticBottom: return "static_bottom";
  }
  return "?";
}

MotionClass parse_motion_class(const std::string& text) {
  if (text == "left_right") return MotionClass::LeftRight;
  if (text == "right_left") return MotionClass::RightLeft;
  if (text == "static_top") return MotionClass::StaticTop;
  if (text == "static_bottom") return MotionClass::StaticBottom;
  throw std::invalid_argument("unknown motion class '" + text + "'");
}

void SyntheticSpec::validate() const {
  if (height < 8 || width < 8) throw std::invalid_argument("synthetic: frames too small");
  if (clip_frames < 2) throw std::invalid_argument("synthetic: need at least 2 frames");
  if (clips_per_class < 1) throw std::invalid_argument("synthetic: clips_per_class must be >= 1");
  if (noise_sigma < 0.0) throw std::invalid_argument("synthetic: noise must be >= 0");
  if (square < 1 || step < 0) throw std::invalid_argument("synthetic: bad square/step");
  const int travel = step * (clip_frames - 1) + square;
  if (travel > width) throw std::invalid_argument("synthetic: trajectory leaves the frame");
  bool has_lr = false, has_rl = false;
  for (MotionClass c : classes) {
    has_lr = has_lr || c == MotionClass::LeftRight;
    has_rl = has_rl || c == MotionClass::RightLeft;
  }
  if (!(has_lr && has_rl)) {
    throw std::invalid_argument("synthetic: class list must contain an order-contrastive pair");
  }
}

namespace {
void draw_square(Tensor5& clip, int t, int row, int col, int side) {
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) clip.at(0, 0, t, row + i, col + j) = 1.0;
  }
}
}  // namespace

Tensor5 render_clip(const SyntheticSpec& spec, MotionClass c) {
  Tensor5 clip(1, 1, spec.clip_frames, spec.height, spec.width);
  const int T = spec.clip_frames;
  const int travel = spec.step * (T - 1);
  const int margin = (spec.width - spec.square - travel) / 2;
  const int mid_row = (spec.height - spec.square) / 2;
  for (int t = 0; t < T; ++t) {
    switch (c) {
      case MotionClass::LeftRight:
        draw_square(clip, t, mid_row, margin + spec.step * t, spec.square);
        break;
      case MotionClass::RightLeft:
        // Same frame set as LeftRight, reversed order.
        draw_square(clip, t, mid_row, margin + spec.step * (T - 1 - t), spec.square);
        break;
      case MotionClass::StaticTop:
        draw_square(clip, t, 2, (spec.width - spec.square) / 2, spec.square);
        break;
      case MotionClass::StaticBottom:
        draw_square(clip, t, spec.height - spec.square - 2, (spec.width - spec.square) / 2,
                    spec.square);
        break;
    }
  }
  return clip;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset data;
  data.reserve(spec.classes.size() * spec.clips_per_class);
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    for (int k = 0; k < spec.clips_per_class; ++k) {
      Sample s;
      s.label = static_cast<int>(ci);
      s.clip = render_clip(spec, spec.classes[ci]);
      if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(spec.seed ^ mix_seed(ci * 100003ULL + k)));
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (std::size_t i = 0; i < s.clip.size(); ++i) s.clip.data()[i] += noise(rng);
      }
      data.push_back(std::move(s));
    }
  }
  return data;
}

}  // namespace gstnet
