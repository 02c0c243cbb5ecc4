#include "ecl/harness/evaluate.hpp"

#include <limits>

namespace ecl::harness {

EvalResult score_predictions(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw DimensionError("score_predictions: size mismatch");
  if (labels.empty()) throw EmptySequenceError("score_predictions: empty split");
  EvalResult r;
  std::array<int, kNumClasses> correct{};
  int total_correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > kNumClasses) throw LabelError("label out of range in evaluation");
    const auto k = static_cast<std::size_t>(labels[i] - 1);
    ++r.support[k];
    if (predictions[i] == labels[i]) {
      ++correct[k];
      ++total_correct;
    }
  }
  r.accuracy = static_cast<double>(total_correct) / static_cast<double>(labels.size());
  for (std::size_t k = 0; k < kNumClasses; ++k)
    r.per_number[k] = r.support[k] > 0 ? static_cast<double>(correct[k]) / r.support[k]
                                       : std::numeric_limits<double>::quiet_NaN();
  return r;
}

EvalResult evaluate(const EmbodiedParams<float>& params, std::span<const SequenceInput<float>> split,
                    bool with_motor) {
  std::vector<int> labels, preds;
  double sq = 0.0;
  long long steps = 0;
  for (const auto& in : split) {
    const auto out = embodied_forward(in, params);
    labels.push_back(in.label);
    preds.push_back(predict_label(out.logits));
    for (Index t = 0; t < in.steps(); ++t) {
      if (!in.valid(t)) continue;
      sq += (out.motor_pred.row(t) - in.motor_target.row(t)).cast<double>().squaredNorm();
      ++steps;
    }
  }
  auto r = score_predictions(labels, preds);
  if (with_motor && steps > 0) r.motor_mse = sq / static_cast<double>(steps);
  return r;
}

EvalResult evaluate(const VisionParams<float>& params, std::span<const SequenceInput<float>> split, VisionMode mode) {
  std::vector<int> labels, preds;
  for (const auto& in : split) {
    labels.push_back(in.label);
    preds.push_back(predict_label(vision_forward(in, params, mode).logits));
  }
  return score_predictions(labels, preds);
}

}  // namespace ecl::harness
