#include "gstnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gstnet/tensor.hpp"

namespace gstnet {

std::vector<GradCheckReport> finite_diff_check(const std::function<double()>& loss,
                                               const std::function<void()>& compute_grads,
                                               const std::vector<ParamBlock>& params,
                                               const GradCheckOptions& opt) {
  if (opt.step <= 0.0) throw std::invalid_argument("gradcheck: step must be positive");

  if (!std::isfinite(loss())) {
    throw std::runtime_error("gradcheck: loss is non-finite at the unperturbed point");
  }
  compute_grads();
  // Snapshot: the perturbed evaluations below must not depend on grad slots.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const ParamBlock& p : params) analytic.push_back(*p.grad);

  std::mt19937_64 rng(mix_seed(opt.seed));
  std::vector<GradCheckReport> reports;
  reports.reserve(params.size());

  for (std::size_t bi = 0; bi < params.size(); ++bi) {
    const ParamBlock& p = params[bi];
    std::vector<double>& theta = *p.value;
    GradCheckReport rep;
    rep.param = p.name;

    std::vector<std::size_t> elems(theta.size());
    for (std::size_t i = 0; i < elems.size(); ++i) elems[i] = i;
    if (opt.max_elements_per_block > 0 &&
        elems.size() > static_cast<std::size_t>(opt.max_elements_per_block)) {
      std::shuffle(elems.begin(), elems.end(), rng);
      elems.resize(static_cast<std::size_t>(opt.max_elements_per_block));
    }

    for (std::size_t ei : elems) {
      const double saved = theta[ei];
      theta[ei] = saved + opt.step;
      const double up = loss();
      theta[ei] = saved - opt.step;
      const double down = loss();
      theta[ei] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("gradcheck: non-finite loss while perturbing " + p.name);
      }
      const double numeric = (up - down) / (2.0 * opt.step);
      const double exact = analytic[bi][ei];
      const double abs_err = std::abs(numeric - exact);
      const double rel_err = abs_err / std::max({std::abs(numeric), std::abs(exact), 1.0});
      rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
      rep.max_rel_err = std::max(rep.max_rel_err, rel_err);
    }
    rep.pass = rep.max_rel_err < opt.tol;
    reports.push_back(std::move(rep));
  }
  return reports;
}

bool all_pass(const std::vector<GradCheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const GradCheckReport& r) { return r.pass; });
}

}  // namespace gstnet
