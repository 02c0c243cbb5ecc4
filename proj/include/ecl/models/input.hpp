#pragma once

#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "ecl/autodiff/layers.hpp"
#include "ecl/autodiff/losses.hpp"
#include "ecl/envsim/scene.hpp"

namespace ecl {

/// Which pose the motor head is trained to emit at step t.
enum class MotorTarget { Next, Current };

/// An episode converted to network inputs. Joint angles are divided by pi;
/// pixels are centered around zero.
template <typename Scalar>
struct SequenceInput {
  std::string id;
  int label = 0;
  // Shared and immutable: copies of an input (e.g. with a foreign motor
  // stream) reuse the same images.
  std::shared_ptr<const std::vector<FeatureMap<Scalar>>> frames;
  Mat<Scalar> motor_in;      // T x joints
  Mat<Scalar> motor_target;  // T x joints
  StepMask valid;            // all true unless padded

  Index steps() const { return frames ? static_cast<Index>(frames->size()) : 0; }
  const std::vector<FeatureMap<Scalar>>& images() const {
    static const std::vector<FeatureMap<Scalar>> none;
    return frames ? *frames : none;
  }
};

template <typename Scalar>
FeatureMap<Scalar> image_to_feature_map(const envsim::Image& img) {
  auto fm = FeatureMap<Scalar>::zeros(3, img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        fm.data(ch, static_cast<Index>(r) * img.width + c) = static_cast<Scalar>(img.at(r, c, ch) - 0.5f);
  return fm;
}

template <typename Scalar>
SequenceInput<Scalar> make_sequence_input(const envsim::Episode& ep, MotorTarget target = MotorTarget::Next) {
  if (ep.frames.empty()) throw EmptySequenceError("episode " + ep.id + " has no frames");
  const Index T = static_cast<Index>(ep.frames.size());
  SequenceInput<Scalar> in;
  in.id = ep.id;
  in.label = ep.count;
  in.motor_in.resize(T, 2);
  std::vector<FeatureMap<Scalar>> images;
  for (Index t = 0; t < T; ++t) {
    const auto& f = ep.frames[static_cast<std::size_t>(t)];
    images.push_back(image_to_feature_map<Scalar>(f.image));
    in.motor_in(t, 0) = static_cast<Scalar>(f.pose.j1 / std::numbers::pi);
    in.motor_in(t, 1) = static_cast<Scalar>(f.pose.j2 / std::numbers::pi);
  }
  in.frames = std::make_shared<const std::vector<FeatureMap<Scalar>>>(std::move(images));
  in.motor_target = in.motor_in;
  if (target == MotorTarget::Next && T > 1) {
    in.motor_target.topRows(T - 1) = in.motor_in.bottomRows(T - 1);  // last step holds
  }
  in.valid = StepMask::Constant(T, true);
  return in;
}

}  // namespace ecl
