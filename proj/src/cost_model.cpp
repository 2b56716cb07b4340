#include "gstnet/cost_model.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gstnet {

namespace {

std::string conv_kind_string(const ConvSpec& s) {
  std::ostringstream os;
  os << "conv k=" << s.k_t << "x" << s.k_h << "x" << s.k_w << " s=" << s.s_t << "x" << s.s_h
     << "x" << s.s_w << " g=" << s.groups;
  return os.str();
}

}  // namespace

long long block_params_closed_form(const BlockKind& kind, int c_i, int c_o) {
  kind.validate();
  const long long hw = static_cast<long long>(kind.k_h) * kind.k_w;
  const long long thw = hw * kind.k_t;
  switch (kind.family) {
    case BlockFamily::C2D:
      return hw * c_i * c_o;
    case BlockFamily::C3D:
      return thw * c_i * c_o;
    case BlockFamily::C3DGroup:
      if (c_i % kind.groups != 0 || c_o % kind.groups != 0) {
        throw std::invalid_argument("closed form: groups must divide channels");
      }
      return thw * c_i / kind.groups * c_o;
    case BlockFamily::P3D:
      // HW*C_i*C_o + T*C_o^2; equals (HW+T)*C_i*C_o when C_i == C_o.
      return hw * c_i * c_o + static_cast<long long>(kind.k_t) * c_o * c_o;
    case BlockFamily::GstLarge:
    case BlockFamily::Gst: {
      const GstConfig cfg = kind.gst_config();
      cfg.check_channels(c_i, c_o);
      const long long c_os = cfg.spatial_out(c_o);
      const long long c_ot = cfg.temporal_out(c_o);
      const long long c_in_path = cfg.path_in(c_i);
      return c_os * c_in_path * hw + c_ot * c_in_path * thw;
    }
  }
  throw std::invalid_argument("closed form: unknown family");
}

std::vector<std::array<int, 5>> infer_shapes(const Network& net,
                                             const std::array<int, 5>& input_shape) {
  std::vector<std::array<int, 5>> shapes(net.nodes.size(), {0, 0, 0, 0, 0});
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Node& node = net.nodes[i];
    const auto in = [&](int slot) -> const std::array<int, 5>& {
      return shapes[node.inputs[slot]];
    };
    switch (node.kind) {
      case NodeKind::Input:
        shapes[i] = input_shape;
        break;
      case NodeKind::Conv: {
        const auto& s = in(0);
        const auto ext = node.conv.spec.output_extent(s[2], s[3], s[4]);
        shapes[i] = {s[0], node.conv.spec.out_channels, ext[0], ext[1], ext[2]};
        break;
      }
      case NodeKind::BatchNorm:
      case NodeKind::Relu:
      case NodeKind::Dropout:
        shapes[i] = in(0);
        break;
      case NodeKind::MaxPoolSpatial: {
        const auto& s = in(0);
        const int ho = (s[3] + 2 * node.pool_pad - node.pool_kernel) / node.pool_stride + 1;
        const int wo = (s[4] + 2 * node.pool_pad - node.pool_kernel) / node.pool_stride + 1;
        shapes[i] = {s[0], s[1], s[2], ho, wo};
        break;
      }
      case NodeKind::Add:
        shapes[i] = in(0);
        break;
      case NodeKind::ConcatChannels: {
        shapes[i] = in(0);
        shapes[i][1] += in(1)[1];
        break;
      }
      case NodeKind::SliceChannels:
        shapes[i] = in(0);
        shapes[i][1] = node.slice_end - node.slice_begin;
        break;
      case NodeKind::GlobalAvgPoolSpatial:
        shapes[i] = {in(0)[0], in(0)[1], in(0)[2], 1, 1};
        break;
      case NodeKind::Linear:
        shapes[i] = {in(0)[0], node.linear.out_features, in(0)[2], 1, 1};
        break;
      case NodeKind::FrameAverage:
        shapes[i] = {in(0)[0], in(0)[1], 1, 1, 1};
        break;
    }
  }
  return shapes;
}

CostReport count_params(const Network& net) {
  CostReport report;
  for (const Node& node : net.nodes) {
    switch (node.kind) {
      case NodeKind::Conv: {
        CostRow row;
        row.layer = node.name;
        row.kind = conv_kind_string(node.conv.spec);
        row.params = static_cast<long long>(node.conv.weights.size()) +
                     static_cast<long long>(node.conv.bias.size());
        row.params_formula = node.conv.spec.weight_count() +
                             static_cast<long long>(node.conv.bias.size());
        report.rows.push_back(std::move(row));
        break;
      }
      case NodeKind::BatchNorm: {
        CostRow row;
        row.layer = node.name;
        row.kind = "bn";
        row.params = static_cast<long long>(node.bn.gamma.size() + node.bn.shift.size());
        row.params_formula = row.params;
        report.rows.push_back(std::move(row));
        break;
      }
      case NodeKind::Linear: {
        CostRow row;
        row.layer = node.name;
        row.kind = "linear";
        row.params = static_cast<long long>(node.linear.weights.size() + node.linear.bias.size());
        row.params_formula =
            static_cast<long long>(node.linear.in_features) * node.linear.out_features +
            node.linear.out_features;
        report.rows.push_back(std::move(row));
        break;
      }
      default:
        break;
    }
  }
  for (const CostRow& row : report.rows) {
    report.total_params += row.params;
    report.total_params_formula += row.params_formula;
  }
  return report;
}

CostReport count_macs(const Network& net, const std::array<int, 5>& input_shape) {
  CostReport report = count_params(net);
  report.input_shape = input_shape;
  const auto shapes = infer_shapes(net, input_shape);

  std::size_t row_index = 0;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Node& node = net.nodes[i];
    if (node.kind != NodeKind::Conv && node.kind != NodeKind::BatchNorm &&
        node.kind != NodeKind::Linear) {
      continue;
    }
    CostRow& row = report.rows[row_index++];
    if (node.kind == NodeKind::Conv) {
      const ConvSpec& s = node.conv.spec;
      const auto& out = shapes[i];
      const long long out_elems =
          static_cast<long long>(out[0]) * out[1] * out[2] * out[3] * out[4];
      row.macs = out_elems * (s.in_channels / s.groups) * s.k_t * s.k_h * s.k_w;
    } else if (node.kind == NodeKind::Linear) {
      const auto& out = shapes[i];
      row.macs = static_cast<long long>(out[0]) * out[2] * node.linear.in_features *
                 node.linear.out_features;
    }
  }
  for (const CostRow& row : report.rows) report.total_macs += row.macs;
  return report;
}

void CostReport::write_csv(std::ostream& os) const {
  os << "layer,kind,params,params_formula,macs\n";
  for (const CostRow& row : rows) {
    os << row.layer << "," << row.kind << "," << row.params << "," << row.params_formula << ","
       << row.macs << "\n";
  }
  os << "total,," << total_params << "," << total_params_formula << "," << total_macs << "\n";
}

std::string CostReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["flop_convention"] = flop_convention;
  j["input_shape"] = input_shape;
  j["layers"] = nlohmann::ordered_json::array();
  for (const CostRow& row : rows) {
    j["layers"].push_back({{"layer", row.layer},
                           {"kind", row.kind},
                           {"params", row.params},
                           {"params_formula", row.params_formula},
                           {"macs", row.macs}});
  }
  j["totals"] = {{"params", total_params},
                 {"params_formula", total_params_formula},
                 {"macs", total_macs}};
  return j.dump(2);
}

std::vector<CompareRow> compare(const std::vector<NetworkSpec>& specs,
                                const std::array<int, 5>& input_shape) {
  if (specs.empty()) throw std::invalid_argument("compare: need at least one spec");
  std::vector<CompareRow> rows;
  rows.reserve(specs.size());
  for (const NetworkSpec& spec : specs) {
    Network net = make_network(spec);
    const CostReport r = count_macs(net, input_shape);
    CompareRow row;
    row.label = backbone_name(spec.backbone) + " " + spec.block.label();
    row.params = r.total_params;
    row.macs = r.total_macs;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& os) {
  os << "model,params,macs\n";
  for (const CompareRow& row : rows) {
    os << row.label << "," << row.params << "," << row.macs << "\n";
  }
}

std::string compare_to_json(const std::vector<CompareRow>& rows) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["models"] = nlohmann::ordered_json::array();
  for (const CompareRow& row : rows) {
    j["models"].push_back({{"model", row.label}, {"params", row.params}, {"macs", row.macs}});
  }
  return j.dump(2);
}

}  // namespace gstnet
