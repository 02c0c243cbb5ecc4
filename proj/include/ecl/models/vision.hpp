#pragma once

#include <algorithm>

#include "ecl/autodiff/losses.hpp"
#include "ecl/models/input.hpp"
#include "ecl/models/visual.hpp"

namespace ecl {

/// Visual encoder followed by a two-layer MLP: fc2(ReLU(fc1 v)).
template <typename S>
struct VisionParams {
  using Scalar = S;
  ModelWidths widths;
  VisualEncoderParams<Scalar> visual;
  LinearParams<Scalar> fc1, fc2;

  VisionParams() = default;
  explicit VisionParams(const ModelWidths& w)
      : widths(w), visual(w), fc1(w.visual, w.classifier_hidden), fc2(w.classifier_hidden, w.classes) {
    w.validate();
  }

  template <typename Self, typename Sink>
  static void visit_impl(Self& self, const std::string& prefix, Sink&& sink) {
    self.visual.visit_named(join_name(prefix, "visual"), sink);
    self.fc1.visit_named(join_name(prefix, "classifier.fc1"), sink);
    self.fc2.visit_named(join_name(prefix, "classifier.fc2"), sink);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) { visit_impl(*this, prefix, sink); }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const { visit_impl(*this, prefix, sink); }
};

template <typename Scalar>
void init_vision(VisionParams<Scalar>& p, Rng& rng) {
  init_visual(p.visual, rng);
  init_kaiming(p.fc1, rng);
  init_kaiming(p.fc2, rng);
}

enum class VisionMode { Single, Pool };

template <typename Scalar>
struct VisionTape {
  std::vector<VisualCache<Scalar>> visual;
  Vec<Scalar> feature;  // final-frame or mean feature
  Vec<Scalar> hidden;   // post-ReLU
};

template <typename Scalar>
struct VisionOutput {
  Vec<Scalar> logits;
  VisionTape<Scalar> tape;
};

namespace detail {
template <typename Scalar>
Vec<Scalar> vision_head(const VisionParams<Scalar>& p, VisionOutput<Scalar>& out) {
  out.tape.hidden = relu(linear(p.fc1, out.tape.feature));
  return linear(p.fc2, out.tape.hidden);
}
}  // namespace detail

template <typename Scalar>
VisionOutput<Scalar> vision_single_forward(const FeatureMap<Scalar>& image, const VisionParams<Scalar>& p) {
  VisionOutput<Scalar> out;
  out.tape.visual.resize(1);
  out.tape.feature = visual_forward(p.visual, image, out.tape.visual[0]);
  out.logits = detail::vision_head(p, out);
  return out;
}

template <typename Scalar>
VisionOutput<Scalar> vision_pooled_forward(const std::vector<FeatureMap<Scalar>>& images,
                                           const VisionParams<Scalar>& p) {
  if (images.empty()) throw EmptySequenceError("vision_pooled_forward: no frames");
  VisionOutput<Scalar> out;
  out.tape.visual.resize(images.size());
  std::vector<Vec<Scalar>> features;
  for (std::size_t t = 0; t < images.size(); ++t) features.push_back(visual_forward(p.visual, images[t], out.tape.visual[t]));
  // Summing in a canonical order makes the mean bitwise independent of frame order.
  std::sort(features.begin(), features.end(), [](const Vec<Scalar>& a, const Vec<Scalar>& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  out.tape.feature = Vec<Scalar>::Zero(p.widths.visual);
  for (const auto& f : features) out.tape.feature += f;
  out.tape.feature /= Scalar(images.size());
  out.logits = detail::vision_head(p, out);
  return out;
}

template <typename Scalar>
VisionOutput<Scalar> vision_forward(const SequenceInput<Scalar>& in, const VisionParams<Scalar>& p, VisionMode mode) {
  if (in.steps() == 0) throw EmptySequenceError("vision_forward: episode " + in.id + " has no frames");
  return mode == VisionMode::Single ? vision_single_forward(in.images().back(), p) : vision_pooled_forward(in.images(), p);
}

/// Backward from dL/dlogits. In pooled mode every frame receives 1/T of the
/// feature gradient. `tap` receives block activation gradients of frame
/// `tap_frame` (index into the frames the forward pass consumed).
template <typename Scalar>
void vision_backward(const VisionParams<Scalar>& p, const VisionOutput<Scalar>& fwd, const Vec<Scalar>& d_logits,
                     VisionParams<Scalar>& grads, std::size_t tap_frame = 0,
                     std::array<FeatureMap<Scalar>, 3>* tap = nullptr) {
  const auto& tape = fwd.tape;
  Vec<Scalar> d_hidden = linear_backward(p.fc2, tape.hidden, d_logits, grads.fc2);
  d_hidden = relu_backward(tape.hidden, d_hidden);
  Vec<Scalar> d_feature = linear_backward(p.fc1, tape.feature, d_hidden, grads.fc1);
  d_feature /= Scalar(tape.visual.size());
  for (std::size_t t = 0; t < tape.visual.size(); ++t)
    visual_backward(p.visual, tape.visual[t], d_feature, grads.visual, t == tap_frame ? tap : nullptr);
}

template <typename Scalar>
Scalar vision_loss_and_grad(const SequenceInput<Scalar>& in, const VisionParams<Scalar>& p, VisionMode mode,
                            VisionParams<Scalar>& grads, Vec<Scalar>* logits = nullptr) {
  const auto fwd = vision_forward(in, p, mode);
  const auto ce = softmax_cross_entropy(fwd.logits, in.label);
  vision_backward(p, fwd, ce.grad, grads);
  if (logits) *logits = fwd.logits;
  return ce.loss;
}

}  // namespace ecl
