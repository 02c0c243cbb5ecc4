#pragma once

#include <array>
#include <optional>

#include "ecl/autodiff/losses.hpp"
#include "ecl/autodiff/lstm.hpp"
#include "ecl/models/input.hpp"
#include "ecl/models/visual.hpp"

namespace ecl {

template <typename S>
struct EmbodiedParams {
  using Scalar = S;
  ModelWidths widths;
  VisualEncoderParams<Scalar> visual;
  LinearParams<Scalar> motor_fc1, motor_fc2;
  LstmCellParams<Scalar> lstm1, lstm2;
  LinearParams<Scalar> count_head, motor_head;

  EmbodiedParams() = default;
  explicit EmbodiedParams(const ModelWidths& w)
      : widths(w),
        visual(w),
        motor_fc1(w.joints, w.motor_hidden),
        motor_fc2(w.motor_hidden, w.motor),
        lstm1(w.lstm_input(), w.hidden),
        lstm2(w.hidden, w.hidden),
        count_head(w.hidden, w.classes),
        motor_head(w.hidden, w.joints) {
    w.validate();
  }

  template <typename Self, typename Sink>
  static void visit_impl(Self& self, const std::string& prefix, Sink&& sink) {
    self.visual.visit_named(join_name(prefix, "visual"), sink);
    self.motor_fc1.visit_named(join_name(prefix, "motor.fc1"), sink);
    self.motor_fc2.visit_named(join_name(prefix, "motor.fc2"), sink);
    self.lstm1.visit_named(join_name(prefix, "lstm1"), sink);
    self.lstm2.visit_named(join_name(prefix, "lstm2"), sink);
    self.count_head.visit_named(join_name(prefix, "count_head"), sink);
    self.motor_head.visit_named(join_name(prefix, "motor_head"), sink);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) { visit_impl(*this, prefix, sink); }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const { visit_impl(*this, prefix, sink); }
};

template <typename Scalar>
void init_embodied(EmbodiedParams<Scalar>& p, Rng& rng) {
  init_visual(p.visual, rng);
  init_kaiming(p.motor_fc1, rng);
  init_kaiming(p.motor_fc2, rng);
  init_lstm(p.lstm1, rng);
  init_lstm(p.lstm2, rng);
  init_kaiming(p.count_head, rng);
  init_kaiming(p.motor_head, rng);
}

/// Per-episode activations kept for analysis.
template <typename Scalar>
struct ActivationTrace {
  int label = 0;
  Mat<Scalar> layer1;  // T x hidden
  Mat<Scalar> layer2;  // T x hidden
  Mat<Scalar> visual;  // T x visual
  FeatureMap<Scalar> final_conv;
};

struct EmbodiedOptions {
  bool train = false;
  Rng* rng = nullptr;         // dropout masks; required when train is set and dropout > 0
  bool zero_motor = false;    // ablation: motor features replaced by zeros
};

/// Everything the backward pass needs.
template <typename Scalar>
struct EmbodiedTape {
  std::vector<VisualCache<Scalar>> visual;
  Mat<Scalar> motor_hidden;  // T x motor_hidden, post-ReLU
  std::vector<LstmStep<Scalar>> step1, step2;
  Mat<Scalar> dropout_mask;  // T x hidden, already scaled by 1/(1-p)
  bool zero_motor = false;
};

template <typename Scalar>
struct EmbodiedOutput {
  Vec<Scalar> logits;
  Mat<Scalar> motor_pred;  // T x joints
  ActivationTrace<Scalar> trace;
  EmbodiedTape<Scalar> tape;
};

template <typename Scalar>
EmbodiedOutput<Scalar> embodied_forward(const SequenceInput<Scalar>& in, const EmbodiedParams<Scalar>& p,
                                        const EmbodiedOptions& opt = {}) {
  const Index T = in.steps();
  if (T == 0) throw EmptySequenceError("embodied_forward: episode " + in.id + " has no frames");
  if (in.motor_in.rows() != T || in.motor_in.cols() != p.widths.joints)
    throw DimensionError("embodied_forward: motor stream shape does not match frames");
  const ModelWidths& w = p.widths;
  const bool use_dropout = opt.train && w.dropout > 0.0;
  if (use_dropout && opt.rng == nullptr) throw ConfigError("embodied_forward: training dropout needs an rng");

  EmbodiedOutput<Scalar> out;
  auto& tape = out.tape;
  auto& trace = out.trace;
  tape.zero_motor = opt.zero_motor;
  tape.visual.resize(static_cast<std::size_t>(T));
  tape.motor_hidden.resize(T, w.motor_hidden);
  trace.label = in.label;
  trace.layer1.resize(T, w.hidden);
  trace.layer2.resize(T, w.hidden);
  trace.visual.resize(T, w.visual);
  out.motor_pred.resize(T, w.joints);
  tape.dropout_mask = Mat<Scalar>::Ones(T, w.hidden);

  Vec<Scalar> h1 = Vec<Scalar>::Zero(w.hidden), c1 = h1, h2 = h1, c2 = h1;
  Vec<Scalar> x(w.lstm_input());
  const Scalar keep_scale = Scalar(1.0 / (1.0 - w.dropout));
  for (Index t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Vec<Scalar> v = visual_forward(p.visual, in.images()[ti], tape.visual[ti]);
    const Vec<Scalar> a = relu(linear(p.motor_fc1, Vec<Scalar>(in.motor_in.row(t).transpose())));
    tape.motor_hidden.row(t) = a.transpose();
    x.head(w.visual) = v;
    if (opt.zero_motor) {
      x.tail(w.motor).setZero();
    } else {
      x.tail(w.motor) = linear(p.motor_fc2, a);
    }
    trace.visual.row(t) = v.transpose();

    tape.step1.push_back(lstm_cell_step(x, h1, c1, p.lstm1));
    h1 = tape.step1.back().hidden;
    c1 = tape.step1.back().cell;
    Vec<Scalar> x2 = h1;
    if (use_dropout) {
      for (Index j = 0; j < w.hidden; ++j)
        tape.dropout_mask(t, j) = uniform01(*opt.rng) < w.dropout ? Scalar(0) : keep_scale;
      x2 = x2.cwiseProduct(Vec<Scalar>(tape.dropout_mask.row(t).transpose()));
    }
    tape.step2.push_back(lstm_cell_step(x2, h2, c2, p.lstm2));
    h2 = tape.step2.back().hidden;
    c2 = tape.step2.back().cell;
    trace.layer1.row(t) = h1.transpose();
    trace.layer2.row(t) = h2.transpose();
    out.motor_pred.row(t) = linear(p.motor_head, h2).transpose();
  }
  out.logits = linear(p.count_head, h2);
  trace.final_conv = tape.visual.back().activation[2];
  return out;
}

/// Backpropagates dL/dlogits and dL/dmotor_pred (T x joints). Optionally
/// returns the per-block activation gradients of frame `tap_frame`.
template <typename Scalar>
void embodied_backward(const SequenceInput<Scalar>& in, const EmbodiedParams<Scalar>& p,
                       const EmbodiedOutput<Scalar>& fwd, const Vec<Scalar>& d_logits, const Mat<Scalar>& d_motor,
                       EmbodiedParams<Scalar>& grads, Index tap_frame = -1,
                       std::array<FeatureMap<Scalar>, 3>* tap = nullptr) {
  const ModelWidths& w = p.widths;
  const auto& tape = fwd.tape;
  const Index T = in.steps();
  const Vec<Scalar>& h_final = tape.step2.back().hidden;

  Mat<Scalar> d_h2 = Mat<Scalar>::Zero(T, w.hidden);
  d_h2.row(T - 1) = linear_backward(p.count_head, h_final, d_logits, grads.count_head).transpose();
  for (Index t = 0; t < T; ++t) {
    const Vec<Scalar> dm = d_motor.row(t).transpose();
    if (dm.isZero(0)) continue;
    d_h2.row(t) += linear_backward(p.motor_head, tape.step2[static_cast<std::size_t>(t)].hidden, dm,
                                   grads.motor_head)
                       .transpose();
  }

  Mat<Scalar> d_h1 = Mat<Scalar>::Zero(T, w.hidden);
  Vec<Scalar> dh = Vec<Scalar>::Zero(w.hidden), dc = dh;
  for (Index t = T - 1; t >= 0; --t) {
    dh += d_h2.row(t).transpose();
    const auto g = lstm_cell_step_backward(tape.step2[static_cast<std::size_t>(t)], dh, dc, p.lstm2, grads.lstm2);
    d_h1.row(t) = g.d_x.transpose().cwiseProduct(tape.dropout_mask.row(t));
    dh = g.d_h_prev;
    dc = g.d_c_prev;
  }

  dh.setZero();
  dc.setZero();
  for (Index t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    dh += d_h1.row(t).transpose();
    const auto g = lstm_cell_step_backward(tape.step1[ti], dh, dc, p.lstm1, grads.lstm1);
    dh = g.d_h_prev;
    dc = g.d_c_prev;

    if (!tape.zero_motor) {
      const Vec<Scalar> a = tape.motor_hidden.row(t).transpose();
      Vec<Scalar> da = linear_backward(p.motor_fc2, a, Vec<Scalar>(g.d_x.tail(w.motor)), grads.motor_fc2);
      da = relu_backward(a, da);
      linear_backward(p.motor_fc1, Vec<Scalar>(in.motor_in.row(t).transpose()), da, grads.motor_fc1);
    }
    visual_backward(p.visual, tape.visual[ti], Vec<Scalar>(g.d_x.head(w.visual)), grads.visual,
                    t == tap_frame ? tap : nullptr);
  }
}

template <typename Scalar>
struct EmbodiedLoss {
  Scalar total{};
  Scalar count{};
  std::optional<Scalar> motor;  // absent when lambda is zero
  Vec<Scalar> logits;
};

/// L = L_count + lambda * L_motor, with gradients accumulated into `grads`.
template <typename Scalar>
EmbodiedLoss<Scalar> embodied_loss_and_grad(const SequenceInput<Scalar>& in, const EmbodiedParams<Scalar>& p,
                                            double lambda, const EmbodiedOptions& opt,
                                            EmbodiedParams<Scalar>& grads) {
  const auto fwd = embodied_forward(in, p, opt);
  const auto ce = softmax_cross_entropy(fwd.logits, in.label);
  EmbodiedLoss<Scalar> out;
  out.count = ce.loss;
  out.total = ce.loss;
  out.logits = fwd.logits;
  Mat<Scalar> d_motor = Mat<Scalar>::Zero(in.steps(), p.widths.joints);
  if (lambda != 0.0) {
    const auto ml = mse_motor_loss(fwd.motor_pred, in.motor_target, in.valid);
    out.motor = ml.loss;
    out.total += Scalar(lambda) * ml.loss;
    d_motor = Scalar(lambda) * ml.grad;
  }
  embodied_backward(in, p, fwd, ce.grad, d_motor, grads);
  return out;
}

}  // namespace ecl
