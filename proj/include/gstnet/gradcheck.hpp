#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gstnet {

struct GradCheckReport {
  std::string param;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  bool pass = false;
};

// A named parameter block: the raw values plus the analytic gradient slot.
struct ParamBlock {
  std::string name;
  std::vector<double>* value = nullptr;
  const std::vector<double>* grad = nullptr;
};

struct GradCheckOptions {
  double tol = 1e-4;
  double step = 1e-5;
  // <= 0 checks every element; otherwise a deterministic sample per block.
  int max_elements_per_block = -1;
  std::uint64_t seed = 0;
};

// Central differences (f(x+e)-f(x-e))/2e against the analytic gradient.
// loss must be a pure function of the current parameter values;
// compute_grads must leave the analytic gradient of loss in each block's
// grad slot. Throws std::runtime_error on non-finite values.
std::vector<GradCheckReport> finite_diff_check(const std::function<double()>& loss,
                                               const std::function<void()>& compute_grads,
                                               const std::vector<ParamBlock>& params,
                                               const GradCheckOptions& opt = {});

bool all_pass(const std::vector<GradCheckReport>& reports);

}  // namespace gstnet
