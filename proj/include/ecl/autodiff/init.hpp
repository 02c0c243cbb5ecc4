#pragma once

#include <cmath>

#include "ecl/autodiff/lstm.hpp"
#include "ecl/autodiff/params.hpp"
#include "ecl/core/rng.hpp"

namespace ecl {

template <typename Derived>
void fill_uniform(Eigen::PlainObjectBase<Derived>& m, double bound, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(uniform(rng, -bound, bound));
}

/// Kaiming-uniform over fan-in with leaky slope sqrt(5), the usual framework
/// default: weights and biases both uniform in +-1/sqrt(fan_in).
inline double kaiming_bound(double fan_in, double slope = std::sqrt(5.0)) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  return gain * std::sqrt(3.0 / fan_in);
}

template <typename Scalar>
void init_kaiming(LinearParams<Scalar>& p, Rng& rng) {
  const double fan_in = static_cast<double>(p.in_features());
  fill_uniform(p.weight, kaiming_bound(fan_in), rng);
  fill_uniform(p.bias, 1.0 / std::sqrt(fan_in), rng);
}

template <typename Scalar>
void init_kaiming(ConvParams<Scalar>& p, Rng& rng) {
  const double fan_in = static_cast<double>(p.weight.cols());
  fill_uniform(p.weight, kaiming_bound(fan_in), rng);
  fill_uniform(p.bias, 1.0 / std::sqrt(fan_in), rng);
}

/// Uniform +-1/sqrt(hidden) everywhere, forget-gate bias shifted by +1.
template <typename Scalar>
void init_lstm(LstmCellParams<Scalar>& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.hidden()));
  for (auto* w : {&p.w_forget, &p.w_input, &p.w_output, &p.w_candidate}) fill_uniform(*w, bound, rng);
  for (auto* b : {&p.b_forget, &p.b_input, &p.b_output, &p.b_candidate}) fill_uniform(*b, bound, rng);
  p.b_forget.array() += Scalar(1);
}

}  // namespace ecl
