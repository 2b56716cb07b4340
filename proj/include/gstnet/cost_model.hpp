#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "gstnet/network.hpp"

namespace gstnet {

struct CostRow {
  std::string layer;
  std::string kind;
  long long params = 0;
  long long params_formula = 0;
  long long macs = 0;
};

struct CostReport {
  std::vector<CostRow> rows;
  long long total_params = 0;
  long long total_params_formula = 0;
  long long total_macs = 0;
  std::array<int, 5> input_shape{0, 0, 0, 0, 0};
  std::string flop_convention = "1 FLOP = 1 MAC; convolutions and linear head only";

  void write_csv(std::ostream& os) const;
  std::string to_json() const;
};

// Closed-form weight count of one substituted block (Table-style accounting,
// evaluated with the integer channel splits so it matches enumeration).
long long block_params_closed_form(const BlockKind& kind, int c_i, int c_o);

// Enumerated learned parameters per layer: conv weights, BN gamma/shift,
// linear weights+bias. Running statistics are excluded.
CostReport count_params(const Network& net);

// Multiply-accumulate counts for an input of the given shape; convs cost
// output_elements * (C_i/g) * k_t*k_h*k_w, the linear head C*K per frame,
// everything else zero.
CostReport count_macs(const Network& net, const std::array<int, 5>& input_shape);

// Propagates shapes through the graph without allocating activations.
std::vector<std::array<int, 5>> infer_shapes(const Network& net,
                                             const std::array<int, 5>& input_shape);

struct CompareRow {
  std::string label;
  long long params = 0;
  long long macs = 0;
};

// One row per spec, in the given order, with params and MACs at input_shape.
std::vector<CompareRow> compare(const std::vector<NetworkSpec>& specs,
                                const std::array<int, 5>& input_shape);

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& os);
std::string compare_to_json(const std::vector<CompareRow>& rows);

}  // namespace gstnet
