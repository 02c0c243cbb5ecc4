#pragma once

#include <cmath>
#include <string>

#include "ecl/core/errors.hpp"
#include "ecl/core/types.hpp"

namespace ecl {

template <typename Scalar>
Vec<Scalar> softmax(const Vec<Scalar>& logits) {
  const Vec<Scalar> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss{};
  Vec<Scalar> grad;
};

/// Cross-entropy of softmax(logits) against a 1-based class label.
/// grad = softmax(logits) - onehot(label).
template <typename Scalar>
LossAndGrad<Scalar> softmax_cross_entropy(const Vec<Scalar>& logits, int label) {
  if (label < 1 || label > logits.size()) {
    throw LabelError("label " + std::to_string(label) + " outside 1.." + std::to_string(logits.size()));
  }
  const Scalar shift = logits.maxCoeff();
  const Scalar log_sum = std::log((logits.array() - shift).exp().sum()) + shift;
  LossAndGrad<Scalar> out;
  out.loss = log_sum - logits(label - 1);
  out.grad = (logits.array() - log_sum).exp().matrix();
  out.grad(label - 1) -= Scalar(1);
  return out;
}

using StepMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

template <typename Scalar>
struct MotorLoss {
  Scalar loss{};
  Mat<Scalar> grad;  // same shape as pred; zero on masked steps
};

/// Mean over valid timesteps of the squared Euclidean joint error.
template <typename Scalar>
MotorLoss<Scalar> mse_motor_loss(const Mat<Scalar>& pred, const Mat<Scalar>& target, const StepMask& valid) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || valid.size() != pred.rows()) {
    throw DimensionError("mse_motor_loss: shape mismatch");
  }
  const Index n_valid = valid.count();
  if (n_valid == 0) throw EmptySequenceError("mse_motor_loss: every timestep is masked");
  MotorLoss<Scalar> out;
  out.grad = Mat<Scalar>::Zero(pred.rows(), pred.cols());
  Scalar total = 0;
  for (Index t = 0; t < pred.rows(); ++t) {
    if (!valid(t)) continue;
    const auto diff = (pred.row(t) - target.row(t)).eval();
    total += diff.squaredNorm();
    out.grad.row(t) = Scalar(2) * diff / Scalar(n_valid);
  }
  out.loss = total / Scalar(n_valid);
  return out;
}

}  // namespace ecl
