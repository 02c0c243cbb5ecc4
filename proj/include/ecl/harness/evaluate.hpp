#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ecl/harness/config.hpp"
#include "ecl/models/embodied.hpp"
#include "ecl/models/vision.hpp"

namespace ecl::harness {

struct EvalResult {
  double accuracy = 0.0;
  std::array<double, kNumClasses> per_number{};  // NaN where a numerosity has no episodes
  std::array<int, kNumClasses> support{};
  std::optional<double> motor_mse;              // embodied only
};

/// 1-based class of the largest logit; ties go to the lowest index.
template <typename Derived>
int predict_label(const Eigen::MatrixBase<Derived>& logits) {
  Index best = 0;
  for (Index i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = i;
  return static_cast<int>(best) + 1;
}

EvalResult score_predictions(std::span<const int> labels, std::span<const int> predictions);

/// Eval-mode forward over `split`; motor MSE is the mean squared joint error
/// over all valid steps of all episodes.
EvalResult evaluate(const EmbodiedParams<float>& params, std::span<const SequenceInput<float>> split,
                    bool with_motor = true);
EvalResult evaluate(const VisionParams<float>& params, std::span<const SequenceInput<float>> split, VisionMode mode);

}  // namespace ecl::harness
