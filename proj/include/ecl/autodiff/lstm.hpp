#pragma once

#include <string>

#include "ecl/autodiff/params.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/core/types.hpp"

namespace ecl {

/// Gate weights act on the concatenation [x; h_prev] and have shape
/// hidden x (input + hidden).
template <typename S>
struct LstmCellParams {
  using Scalar = S;
  RowMat<Scalar> w_forget, w_input, w_output, w_candidate;
  Vec<Scalar> b_forget, b_input, b_output, b_candidate;

  LstmCellParams() = default;
  LstmCellParams(Index input, Index hidden) {
    for (auto* w : {&w_forget, &w_input, &w_output, &w_candidate}) w->setZero(hidden, input + hidden);
    for (auto* b : {&b_forget, &b_input, &b_output, &b_candidate}) b->setZero(hidden);
  }

  Index hidden() const { return w_forget.rows(); }
  Index input_size() const { return w_forget.cols() - w_forget.rows(); }

  template <typename Self, typename Sink>
  static void visit_impl(Self& self, const std::string& prefix, Sink&& sink) {
    const std::vector<Index> ws{self.w_forget.rows(), self.w_forget.cols()};
    const std::vector<Index> bs{self.b_forget.size()};
    sink(join_name(prefix, "w_forget"), ws, self.w_forget);
    sink(join_name(prefix, "w_input"), ws, self.w_input);
    sink(join_name(prefix, "w_output"), ws, self.w_output);
    sink(join_name(prefix, "w_candidate"), ws, self.w_candidate);
    sink(join_name(prefix, "b_forget"), bs, self.b_forget);
    sink(join_name(prefix, "b_input"), bs, self.b_input);
    sink(join_name(prefix, "b_output"), bs, self.b_output);
    sink(join_name(prefix, "b_candidate"), bs, self.b_candidate);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) { visit_impl(*this, prefix, sink); }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const { visit_impl(*this, prefix, sink); }
};

/// Everything one step computes; kept for backprop through time and for
/// analysis of gate activity.
template <typename Scalar>
struct LstmStep {
  Vec<Scalar> concat;  // [x; h_prev]
  Vec<Scalar> forget, input, output, candidate;
  Vec<Scalar> cell_prev, cell, tanh_cell, hidden;
};

namespace detail {
template <typename Scalar>
Vec<Scalar> sigmoid(const Vec<Scalar>& z) {
  return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
}
}  // namespace detail

template <typename Scalar>
LstmStep<Scalar> lstm_cell_step(const Vec<Scalar>& x, const Vec<Scalar>& h_prev, const Vec<Scalar>& c_prev,
                                const LstmCellParams<Scalar>& p) {
  const Index hidden = p.hidden();
  if (x.size() != p.input_size() || h_prev.size() != hidden || c_prev.size() != hidden) {
    throw DimensionError("lstm_cell_step: expected input " + std::to_string(p.input_size()) + ", hidden " +
                         std::to_string(hidden));
  }
  LstmStep<Scalar> s;
  s.concat.resize(x.size() + hidden);
  s.concat << x, h_prev;
  s.forget = detail::sigmoid<Scalar>(p.w_forget * s.concat + p.b_forget);
  s.input = detail::sigmoid<Scalar>(p.w_input * s.concat + p.b_input);
  s.output = detail::sigmoid<Scalar>(p.w_output * s.concat + p.b_output);
  s.candidate = (p.w_candidate * s.concat + p.b_candidate).array().tanh().matrix();
  s.cell_prev = c_prev;
  s.cell = s.forget.cwiseProduct(c_prev) + s.input.cwiseProduct(s.candidate);
  s.tanh_cell = s.cell.array().tanh().matrix();
  s.hidden = s.output.cwiseProduct(s.tanh_cell);
  ECL_ASSERT_FINITE(s.hidden, "lstm hidden state");
  return s;
}

template <typename Scalar>
struct LstmStepGrad {
  Vec<Scalar> d_x;
  Vec<Scalar> d_h_prev;
  Vec<Scalar> d_c_prev;
};

/// Backward through one step given dL/dh and dL/dc arriving at this step's
/// outputs. Parameter gradients are accumulated into `grads`.
template <typename Scalar>
LstmStepGrad<Scalar> lstm_cell_step_backward(const LstmStep<Scalar>& s, const Vec<Scalar>& d_h,
                                             const Vec<Scalar>& d_c, const LstmCellParams<Scalar>& p,
                                             LstmCellParams<Scalar>& grads) {
  const auto one = Scalar(1);
  const Vec<Scalar> d_output = d_h.cwiseProduct(s.tanh_cell);
  const Vec<Scalar> d_cell =
      d_c + d_h.cwiseProduct(s.output).cwiseProduct((one - s.tanh_cell.array().square()).matrix());
  const Vec<Scalar> d_forget = d_cell.cwiseProduct(s.cell_prev);
  const Vec<Scalar> d_input = d_cell.cwiseProduct(s.candidate);
  const Vec<Scalar> d_candidate = d_cell.cwiseProduct(s.input);

  const Vec<Scalar> z_forget = d_forget.array() * s.forget.array() * (one - s.forget.array());
  const Vec<Scalar> z_input = d_input.array() * s.input.array() * (one - s.input.array());
  const Vec<Scalar> z_output = d_output.array() * s.output.array() * (one - s.output.array());
  const Vec<Scalar> z_candidate = d_candidate.array() * (one - s.candidate.array().square());

  grads.w_forget.noalias() += z_forget * s.concat.transpose();
  grads.w_input.noalias() += z_input * s.concat.transpose();
  grads.w_output.noalias() += z_output * s.concat.transpose();
  grads.w_candidate.noalias() += z_candidate * s.concat.transpose();
  grads.b_forget += z_forget;
  grads.b_input += z_input;
  grads.b_output += z_output;
  grads.b_candidate += z_candidate;

  Vec<Scalar> d_concat = p.w_forget.transpose() * z_forget;
  d_concat.noalias() += p.w_input.transpose() * z_input;
  d_concat.noalias() += p.w_output.transpose() * z_output;
  d_concat.noalias() += p.w_candidate.transpose() * z_candidate;

  const Index in = p.input_size();
  return {d_concat.head(in), d_concat.tail(p.hidden()), d_cell.cwiseProduct(s.forget)};
}

}  // namespace ecl
