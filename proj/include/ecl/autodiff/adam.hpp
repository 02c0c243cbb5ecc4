#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ecl/autodiff/params.hpp"

namespace ecl {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;  // coupled L2: added to the gradient
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::vector<Vec<Scalar>> m;
  std::vector<Vec<Scalar>> v;
  std::int64_t step = 0;
};

template <typename Params>
AdamState<typename Params::Scalar> make_adam_state(const Params& params, AdamConfig config = {}) {
  AdamState<typename Params::Scalar> state;
  state.config = config;
  for (const auto& p : param_list(params)) {
    state.m.push_back(Vec<typename Params::Scalar>::Zero(p.size));
    state.v.push_back(Vec<typename Params::Scalar>::Zero(p.size));
  }
  return state;
}

/// One bias-corrected Adam step. Weight decay is folded into the gradient
/// before the moment updates.
template <typename Params>
void adam_update(Params& params, const Params& grads, AdamState<typename Params::Scalar>& state) {
  using Scalar = typename Params::Scalar;
  auto ps = param_list(params);
  const auto gs = param_list(grads);
  if (ps.size() != state.m.size() || gs.size() != ps.size()) {
    throw DimensionError("adam_update: parameter/state layout mismatch");
  }
  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto wd = static_cast<Scalar>(c.weight_decay);
  const auto step_size = static_cast<Scalar>(c.learning_rate / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(c.epsilon);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].size != state.m[i].size() || gs[i].size != ps[i].size) {
      throw DimensionError("adam_update: size mismatch for " + ps[i].name);
    }
    auto theta = ps[i].flat();
    const Vec<Scalar> g = gs[i].flat() + wd * theta;
    state.m[i] = b1 * state.m[i] + (Scalar(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (Scalar(1) - b2) * g.cwiseProduct(g);
    theta.array() -= step_size * state.m[i].array() / (state.v[i].array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

}  // namespace ecl
