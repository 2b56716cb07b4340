#include "gstnet/blocks.hpp"

#include <stdexcept>

namespace gstnet {

void GstConfig::validate() const {
  if (alpha.num <= 0 || alpha.num > alpha.den) {
    throw std::invalid_argument("gst: alpha must be in (0,1], got " + alpha.str());
  }
  const Rational half{1, 2}, one{1, 1};
  if (!(beta == half) && !(beta == one)) {
    throw std::invalid_argument("gst: beta must be 1 or 1/2, got " + beta.str());
  }
  if (k_t < 1 || k_h < 1 || k_w < 1) throw std::invalid_argument("gst: kernel extents must be >= 1");
}

int GstConfig::temporal_out(int c_o) const {
  return static_cast<int>(alpha.round_times(c_o));
}

int GstConfig::path_in(int c_i) const {
  return static_cast<int>(beta.exact_times(c_i, "gst: beta * C_i"));
}

void GstConfig::check_channels(int c_i, int c_o) const {
  validate();
  if (temporal_out(c_o) < 1) {
    throw std::invalid_argument("gst: temporal output channels would be zero (alpha=" +
                                alpha.str() + ", C_o=" + std::to_string(c_o) + ")");
  }
  if (spatial_out(c_o) < 1) {
    throw std::invalid_argument("gst: spatial output channels would be zero (alpha=" +
                                alpha.str() + ", C_o=" + std::to_string(c_o) + ")");
  }
  path_in(c_i);  // throws on odd C_i with beta = 1/2
}

BlockKind BlockKind::c2d() {
  BlockKind k;
  k.family = BlockFamily::C2D;
  return k;
}

BlockKind BlockKind::c3d() {
  BlockKind k;
  k.family = BlockFamily::C3D;
  return k;
}

BlockKind BlockKind::c3d_group(int g) {
  BlockKind k;
  k.family = BlockFamily::C3DGroup;
  k.groups = g;
  return k;
}

BlockKind BlockKind::p3d() {
  BlockKind k;
  k.family = BlockFamily::P3D;
  return k;
}

BlockKind BlockKind::gst_large(Rational a) {
  BlockKind k;
  k.family = BlockFamily::GstLarge;
  k.alpha = a;
  k.beta = Rational{1, 1};
  return k;
}

BlockKind BlockKind::gst(Rational a, Rational b) {
  BlockKind k;
  k.family = BlockFamily::Gst;
  k.alpha = a;
  k.beta = b;
  return k;
}

GstConfig BlockKind::gst_config() const {
  GstConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = family == BlockFamily::GstLarge ? Rational{1, 1} : beta;
  cfg.k_t = k_t;
  cfg.k_h = k_h;
  cfg.k_w = k_w;
  return cfg;
}

std::string BlockKind::label() const {
  switch (family) {
    case BlockFamily::C2D: return "c2d";
    case BlockFamily::C3D: return "c3d";
    case BlockFamily::C3DGroup: return "c3d_group(g=" + std::to_string(groups) + ")";
    case BlockFamily::P3D: return "p3d";
    case BlockFamily::GstLarge: return "gst_large(alpha=" + alpha.str() + ")";
    case BlockFamily::Gst:
      return "gst(alpha=" + alpha.str() + ",beta=" + beta.str() + ")";
  }
  return "?";
}

void BlockKind::validate() const {
  if (k_t < 1 || k_h < 1 || k_w < 1) throw std::invalid_argument("block: kernel extents must be >= 1");
  switch (family) {
    case BlockFamily::C3DGroup:
      if (groups < 1) throw std::invalid_argument("block: groups must be >= 1");
      break;
    case BlockFamily::Gst:
    case BlockFamily::GstLarge:
      gst_config().validate();
      break;
    default:
      break;
  }
}

BlockKind parse_block_kind(const std::string& text) {
  std::string head = text, arg;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    head = text.substr(0, colon);
    arg = text.substr(colon + 1);
  }
  if (head == "c2d") return BlockKind::c2d();
  if (head == "c3d") return BlockKind::c3d();
  if (head == "c3dg" || head == "c3d_group") {
    return BlockKind::c3d_group(arg.empty() ? 2 : std::stoi(arg));
  }
  if (head == "p3d") return BlockKind::p3d();
  if (head == "gst_large" || head == "gstl") {
    return BlockKind::gst_large(arg.empty() ? Rational{1, 4} : Rational::parse(arg));
  }
  if (head == "gst") {
    return BlockKind::gst(arg.empty() ? Rational{1, 4} : Rational::parse(arg));
  }
  throw std::invalid_argument("unknown block kind '" + text + "'");
}

Backbone parse_backbone(const std::string& text) {
  if (text == "resnet18") return Backbone::ResNet18;
  if (text == "resnet50") return Backbone::ResNet50;
  if (text == "tiny") return Backbone::Tiny;
  throw std::invalid_argument("unknown backbone '" + text + "'");
}

std::string backbone_name(Backbone b) {
  switch (b) {
    case Backbone::ResNet18: return "resnet18";
    case Backbone::ResNet50: return "resnet50";
    case Backbone::Tiny: return "tiny";
  }
  return "?";
}

void NetworkSpec::validate() const {
  block.validate();
  if (num_classes < 1) throw std::invalid_argument("network: num_classes must be >= 1");
  if (frames < 1) throw std::invalid_argument("network: frames must be >= 1");
  if (height < 1 || width < 1) throw std::invalid_argument("network: spatial size must be >= 1");
  if (in_channels < 1) throw std::invalid_argument("network: in_channels must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("network: dropout must be in [0,1)");
  if (backbone == Backbone::Tiny) {
    if (tiny_stages < 1 || tiny_width < 1 || tiny_blocks < 1) {
      throw std::invalid_argument("network: tiny backbone dimensions must be >= 1");
    }
  }
}

}  // namespace gstnet
