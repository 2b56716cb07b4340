#include "gstnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gstnet {

namespace {

constexpr int kSchemaVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

std::string family_name(BlockFamily f) {
  switch (f) {
    case BlockFamily::C2D: return "c2d";
    case BlockFamily::C3D: return "c3d";
    case BlockFamily::C3DGroup: return "c3d_group";
    case BlockFamily::P3D: return "p3d";
    case BlockFamily::GstLarge: return "gst_large";
    case BlockFamily::Gst: return "gst";
  }
  return "?";
}

BlockFamily parse_family(const std::string& name) {
  if (name == "c2d") return BlockFamily::C2D;
  if (name == "c3d") return BlockFamily::C3D;
  if (name == "c3d_group") return BlockFamily::C3DGroup;
  if (name == "p3d") return BlockFamily::P3D;
  if (name == "gst_large") return BlockFamily::GstLarge;
  if (name == "gst") return BlockFamily::Gst;
  throw std::runtime_error("checkpoint: unknown block family '" + name + "'");
}

// Every tensor that must round-trip: learned parameters plus BN running stats.
struct TensorRef {
  std::string name;
  std::string kind;
  std::vector<int> shape;
  std::vector<double>* data;
  int stage;
  int block;
  PathTag path;
};

std::vector<TensorRef> tensor_table(Network& net) {
  std::vector<TensorRef> refs;
  for (Node& node : net.nodes) {
    switch (node.kind) {
      case NodeKind::Conv: {
        const auto ws = node.conv.spec.weight_shape();
        refs.push_back({node.name + ".weight", "conv.weight",
                        {ws[0], ws[1], ws[2], ws[3], ws[4]}, &node.conv.weights.vec(), node.stage,
                        node.block_index, node.path});
        if (!node.conv.bias.empty()) {
          refs.push_back({node.name + ".bias", "conv.bias",
                          {static_cast<int>(node.conv.bias.size())}, &node.conv.bias, node.stage,
                          node.block_index, node.path});
        }
        break;
      }
      case NodeKind::BatchNorm: {
        const int c = node.bn.channels;
        refs.push_back({node.name + ".gamma", "bn.gamma", {c}, &node.bn.gamma, node.stage,
                        node.block_index, node.path});
        refs.push_back({node.name + ".shift", "bn.shift", {c}, &node.bn.shift, node.stage,
                        node.block_index, node.path});
        refs.push_back({node.name + ".running_mean", "bn.running_mean", {c},
                        &node.bn.running_mean, node.stage, node.block_index, node.path});
        refs.push_back({node.name + ".running_var", "bn.running_var", {c}, &node.bn.running_var,
                        node.stage, node.block_index, node.path});
        break;
      }
      case NodeKind::Linear: {
        refs.push_back({node.name + ".weight", "linear.weight",
                        {node.linear.out_features, node.linear.in_features},
                        &node.linear.weights, node.stage, node.block_index, node.path});
        refs.push_back({node.name + ".bias", "linear.bias", {node.linear.out_features},
                        &node.linear.bias, node.stage, node.block_index, node.path});
        break;
      }
      default:
        break;
    }
  }
  return refs;
}

nlohmann::ordered_json spec_to_json(const NetworkSpec& spec) {
  nlohmann::ordered_json j;
  j["backbone"] = backbone_name(spec.backbone);
  j["block_family"] = family_name(spec.block.family);
  j["alpha"] = spec.block.alpha.str();
  j["beta"] = spec.block.beta.str();
  j["groups"] = spec.block.groups;
  j["k_t"] = spec.block.k_t;
  j["k_h"] = spec.block.k_h;
  j["k_w"] = spec.block.k_w;
  j["num_classes"] = spec.num_classes;
  j["frames"] = spec.frames;
  j["height"] = spec.height;
  j["width"] = spec.width;
  j["in_channels"] = spec.in_channels;
  j["tiny_stages"] = spec.tiny_stages;
  j["tiny_width"] = spec.tiny_width;
  j["tiny_blocks"] = spec.tiny_blocks;
  j["dropout"] = spec.dropout;
  j["init_seed"] = spec.init_seed;
  return j;
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.backbone = parse_backbone(j.at("backbone").get<std::string>());
  spec.block.family = parse_family(j.at("block_family").get<std::string>());
  spec.block.alpha = Rational::parse(j.at("alpha").get<std::string>());
  spec.block.beta = Rational::parse(j.at("beta").get<std::string>());
  spec.block.groups = j.at("groups").get<int>();
  spec.block.k_t = j.at("k_t").get<int>();
  spec.block.k_h = j.at("k_h").get<int>();
  spec.block.k_w = j.at("k_w").get<int>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.frames = j.at("frames").get<int>();
  spec.height = j.at("height").get<int>();
  spec.width = j.at("width").get<int>();
  spec.in_channels = j.at("in_channels").get<int>();
  spec.tiny_stages = j.at("tiny_stages").get<int>();
  spec.tiny_width = j.at("tiny_width").get<int>();
  spec.tiny_blocks = j.at("tiny_blocks").get<int>();
  spec.dropout = j.at("dropout").get<double>();
  spec.init_seed = j.at("init_seed").get<std::uint64_t>();
  return spec;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Network& mutable_net = const_cast<Network&>(net);
  const std::vector<TensorRef> refs = tensor_table(mutable_net);

  nlohmann::ordered_json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["network"] = spec_to_json(net.spec);
  manifest["tensors"] = nlohmann::ordered_json::array();

  std::ofstream bin(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("checkpoint: cannot write " + (dir / "weights.bin").string());
  std::size_t offset = 0;
  for (const TensorRef& ref : refs) {
    manifest["tensors"].push_back({{"name", ref.name},
                                   {"kind", ref.kind},
                                   {"shape", ref.shape},
                                   {"offset", offset},
                                   {"count", ref.data->size()},
                                   {"stage", ref.stage},
                                   {"block", ref.block},
                                   {"path", path_tag_name(ref.path)}});
    bin.write(reinterpret_cast<const char*>(ref.data->data()),
              static_cast<std::streamsize>(ref.data->size() * sizeof(double)));
    offset += ref.data->size() * sizeof(double);
  }
  bin.close();
  if (!bin) throw std::runtime_error("checkpoint: short write to weights.bin");

  std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) throw std::runtime_error("checkpoint: cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
}

Network load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("checkpoint: missing " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  mf >> manifest;

  const int version = manifest.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw std::runtime_error("checkpoint: schema version " + std::to_string(version) +
                             " not supported");
  }
  Network net = make_network(spec_from_json(manifest.at("network")));

  std::ifstream bin(dir / "weights.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint: missing " + (dir / "weights.bin").string());
  bin.seekg(0, std::ios::end);
  const std::size_t file_size = static_cast<std::size_t>(bin.tellg());

  const std::vector<TensorRef> refs = tensor_table(net);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != refs.size()) {
    throw std::runtime_error("checkpoint: manifest lists " + std::to_string(tensors.size()) +
                             " tensors, network has " + std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& entry = tensors[i];
    if (entry.at("name").get<std::string>() != refs[i].name) {
      throw std::runtime_error("checkpoint: tensor name mismatch at entry " + std::to_string(i));
    }
    const std::size_t count = entry.at("count").get<std::size_t>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    if (count != refs[i].data->size()) {
      throw std::runtime_error("checkpoint: size mismatch for " + refs[i].name);
    }
    if (offset + count * sizeof(double) > file_size) {
      throw std::runtime_error("checkpoint: weights.bin truncated at " + refs[i].name);
    }
    bin.seekg(static_cast<std::streamoff>(offset));
    bin.read(reinterpret_cast<char*>(refs[i].data->data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!bin) throw std::runtime_error("checkpoint: short read for " + refs[i].name);
  }
  return net;
}

}  // namespace gstnet
