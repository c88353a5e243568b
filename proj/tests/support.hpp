// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "reenc/nn/core.hpp"

namespace testsup {

// Central finite difference of a scalar functional at one parameter slot.
inline double central_diff(const std::function<double()>& eval, double* slot, double h) {
  const double x0 = *slot;
  *slot = x0 + h;
  const double fp = eval();
  *slot = x0 - h;
  const double fm = eval();
  *slot = x0;
  return (fp - fm) / (2.0 * h);
}

struct FdProbeResult {
  int probes = 0;
  int failures = 0;
  double worst_rel = 0.0;
  std::string worst_name;
};

// Probes `count` randomly chosen parameter scalars: analytic gradient (already
// accumulated in the refs) against central differences of `eval`.
inline FdProbeResult probe_params(std::vector<reenc::nn::ParamRef<double>>& params,
                                  const std::function<double()>& eval, reenc::Rng& rng, int count,
                                  double h = 1e-5, double tol = 1e-3) {
  FdProbeResult res;
  for (int p = 0; p < count; ++p) {
    const auto pi = static_cast<std::size_t>(rng.below(params.size()));
    auto& ref = params[pi];
    const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(ref.v->size())));
    const double analytic = ref.g->data()[idx];
    const double fd = central_diff(eval, ref.v->data() + idx, h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    const double rel = std::abs(analytic - fd) / denom;
    ++res.probes;
    if (rel > res.worst_rel) {
      res.worst_rel = rel;
      res.worst_name = ref.name + "[" + std::to_string(idx) + "]";
    }
    if (rel > tol) ++res.failures;
  }
  return res;
}

inline void randomize_params(std::vector<reenc::nn::ParamRef<double>>& params, reenc::Rng& rng,
                             double stddev = 0.3) {
  for (auto& p : params)
    for (Eigen::Index i = 0; i < p.v->size(); ++i) p.v->data()[i] = stddev * rng.gauss();
}

}  // namespace testsup
