#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ecl/autodiff/params.hpp"

namespace ecl {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  Index checked = 0;
};

/// Compares `analytic` against central differences of `loss` over every
/// parameter entry of `params` (which `loss` must read). Relative error per
/// entry is |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true
/// gradient is ~0 from reporting roundoff as error.
template <typename Params>
GradCheckResult gradient_check(Params& params, const std::function<double()>& loss, const Params& analytic,
                               double eps = 1e-5, double floor = 1e-6) {
  auto ps = param_list(params);
  const auto gs = param_list(analytic);
  GradCheckResult result;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto theta = ps[i].flat();
    const auto grad = gs[i].flat();
    for (Index k = 0; k < theta.size(); ++k) {
      const auto saved = theta(k);
      theta(k) = saved + eps;
      const double up = loss();
      theta(k) = saved - eps;
      const double down = loss();
      theta(k) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = static_cast<double>(grad(k));
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (err > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = err;
        result.worst_parameter = ps[i].name;
        result.worst_index = k;
      }
    }
  }
  return result;
}

}  // namespace ecl
