#pragma once

#include <cstdint>
#include <string>

#include "gstnet/rational.hpp"

namespace gstnet {

// Channel accounting for one grouped spatial-temporal block: alpha is the
// proportion of output channels given to the temporal path, beta the
// proportion of input channels each path reads (1 or 1/2).
struct GstConfig {
  Rational alpha{1, 4};
  Rational beta{1, 2};
  int k_t = 3;
  int k_h = 3, k_w = 3;

  void validate() const;
  int temporal_out(int c_o) const;  // round(alpha * c_o)
  int spatial_out(int c_o) const { return c_o - temporal_out(c_o); }
  int path_in(int c_i) const;       // beta * c_i, exact
  // Checks the per-instantiation invariants for a concrete (C_i, C_o).
  void check_channels(int c_i, int c_o) const;
};

enum class BlockFamily { C2D, C3D, C3DGroup, P3D, GstLarge, Gst };

// One row of the block-family table: which spatial-temporal block replaces
// the 3x3 convolution of a residual block.
struct BlockKind {
  BlockFamily family = BlockFamily::C2D;
  Rational alpha{1, 4};   // Gst / GstLarge
  Rational beta{1, 2};    // 1/2 for Gst, 1 for GstLarge
  int groups = 2;         // C3DGroup
  int k_t = 3;
  int k_h = 3, k_w = 3;

  static BlockKind c2d();
  static BlockKind c3d();
  static BlockKind c3d_group(int g);
  static BlockKind p3d();
  static BlockKind gst_large(Rational a);
  static BlockKind gst(Rational a, Rational b = Rational{1, 2});

  GstConfig gst_config() const;
  std::string label() const;
  void validate() const;
};

// Parses "c2d", "c3d", "c3dg" / "c3d_group", "p3d", "gst", "gst_large";
// optional ":alpha" suffix for the GST variants ("gst:1/4").
BlockKind parse_block_kind(const std::string& text);

enum class Backbone { ResNet18, ResNet50, Tiny };

Backbone parse_backbone(const std::string& text);
std::string backbone_name(Backbone b);

struct NetworkSpec {
  Backbone backbone = Backbone::ResNet50;
  BlockKind block = BlockKind::c2d();
  int num_classes = 174;
  int frames = 8;
  int height = 224;
  int width = 224;
  int in_channels = 3;
  // Tiny backbone: basic blocks, tiny_width doubling per stage, stride 2
  // from the second stage on, 3x3 stride-1 stem, no max pool.
  int tiny_stages = 2;
  int tiny_width = 16;
  int tiny_blocks = 1;
  double dropout = 0.3;
  std::uint64_t init_seed = 0;

  void validate() const;
};

}  // namespace gstnet
