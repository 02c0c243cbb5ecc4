#include "ecl/harness/batching.hpp"

#include <algorithm>
#include <numeric>

namespace ecl::harness {

std::vector<std::size_t> order_curriculum(std::span<const int> labels, Curriculum strategy, Rng& rng) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (strategy) {
    case Curriculum::EasyToHard:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
      break;
    case Curriculum::HardToEasy:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] > labels[b]; });
      break;
    case Curriculum::Random:
      fisher_yates(order, rng);
      break;
  }
  return order;
}

Mat<float> fit_stream(const Mat<float>& stream, Index steps) {
  if (stream.rows() == 0) throw EmptySequenceError("fit_stream: empty motor stream");
  Mat<float> out(steps, stream.cols());
  const Index keep = std::min(steps, stream.rows());
  out.topRows(keep) = stream.topRows(keep);
  for (Index t = keep; t < steps; ++t) out.row(t) = stream.row(stream.rows() - 1);
  return out;
}

std::vector<std::size_t> shuffle_joints(std::vector<SequenceInput<float>>& batch, Rng& rng, ShuffleMode mode) {
  const auto perm = random_permutation(batch.size(), rng);
  std::vector<Mat<float>> inputs, targets;
  for (const auto& s : batch) {
    inputs.push_back(s.motor_in);
    targets.push_back(s.motor_target);
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Index steps = batch[i].steps();
    if (mode == ShuffleMode::Both) batch[i].motor_in = fit_stream(inputs[perm[i]], steps);
    batch[i].motor_target = fit_stream(targets[perm[i]], steps);
  }
  return perm;
}

}  // namespace ecl::harness
