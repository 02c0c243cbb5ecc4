#pragma once

#include <array>

#include "ecl/autodiff/init.hpp"
#include "ecl/autodiff/layers.hpp"
#include "ecl/models/widths.hpp"

namespace ecl {

/// Three conv(3x3, pad 1) -> ReLU -> maxpool(2) blocks, global average pool,
/// then a linear projection to the feature width.
template <typename S>
struct VisualEncoderParams {
  using Scalar = S;
  std::array<ConvParams<Scalar>, 3> conv;
  LinearParams<Scalar> proj;

  VisualEncoderParams() = default;
  explicit VisualEncoderParams(const ModelWidths& w)
      : conv{ConvParams<Scalar>(3, w.conv_channels[0], 3), ConvParams<Scalar>(w.conv_channels[0], w.conv_channels[1], 3),
             ConvParams<Scalar>(w.conv_channels[1], w.conv_channels[2], 3)},
        proj(w.conv_channels[2], w.visual) {}

  template <typename Self, typename Sink>
  static void visit_impl(Self& self, const std::string& prefix, Sink&& sink) {
    self.conv[0].visit_named(join_name(prefix, "conv1"), sink);
    self.conv[1].visit_named(join_name(prefix, "conv2"), sink);
    self.conv[2].visit_named(join_name(prefix, "conv3"), sink);
    self.proj.visit_named(join_name(prefix, "proj"), sink);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) { visit_impl(*this, prefix, sink); }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const { visit_impl(*this, prefix, sink); }
};

template <typename Scalar>
void init_visual(VisualEncoderParams<Scalar>& p, Rng& rng) {
  for (auto& c : p.conv) init_kaiming(c, rng);
  init_kaiming(p.proj, rng);
}

template <typename Scalar>
struct VisualCache {
  std::array<ConvCache<Scalar>, 3> conv;
  std::array<FeatureMap<Scalar>, 3> activation;  // post-ReLU, pre-pool
  std::array<PoolCache<Scalar>, 3> pool;
  int gap_height = 0;
  int gap_width = 0;
  Vec<Scalar> pooled;
};

template <typename Scalar>
Vec<Scalar> visual_forward(const VisualEncoderParams<Scalar>& p, const FeatureMap<Scalar>& image,
                           VisualCache<Scalar>& cache) {
  FeatureMap<Scalar> x = image;
  for (std::size_t b = 0; b < 3; ++b) {
    auto y = conv2d(x, p.conv[b].weight, p.conv[b].bias, ConvGeometry{}, &cache.conv[b]);
    y.data = relu(y.data);
    cache.activation[b] = y;
    x = max_pool2(y, &cache.pool[b]);
  }
  cache.gap_height = x.height;
  cache.gap_width = x.width;
  cache.pooled = global_average_pool(x);
  return linear(p.proj, cache.pooled);
}

template <typename Scalar>
Vec<Scalar> visual_forward(const VisualEncoderParams<Scalar>& p, const FeatureMap<Scalar>& image) {
  VisualCache<Scalar> cache;
  return visual_forward(p, image, cache);
}

/// Accumulates gradients for dL/dfeature. When `block_grads` is given, the
/// gradient w.r.t. each block's post-ReLU activation is stored there.
template <typename Scalar>
void visual_backward(const VisualEncoderParams<Scalar>& p, const VisualCache<Scalar>& cache,
                     const Vec<Scalar>& d_feature, VisualEncoderParams<Scalar>& grads,
                     std::array<FeatureMap<Scalar>, 3>* block_grads = nullptr) {
  const Vec<Scalar> d_pooled = linear_backward(p.proj, cache.pooled, d_feature, grads.proj);
  FeatureMap<Scalar> d = global_average_pool_backward(d_pooled, cache.gap_height, cache.gap_width);
  for (int b = 2; b >= 0; --b) {
    const auto bi = static_cast<std::size_t>(b);
    FeatureMap<Scalar> d_act = max_pool2_backward(d, cache.pool[bi]);
    if (block_grads) (*block_grads)[bi] = d_act;
    d_act.data = relu_backward(cache.activation[bi].data, d_act.data);
    if (b == 0) {
      // Input gradient is not needed; skip col2im.
      grads.conv[0].weight.noalias() += d_act.data * cache.conv[0].columns.transpose();
      grads.conv[0].bias += d_act.data.rowwise().sum();
      return;
    }
    d = conv2d_backward(d_act, p.conv[bi].weight, cache.conv[bi], ConvGeometry{}, grads.conv[bi].weight,
                        grads.conv[bi].bias);
  }
}

}  // namespace ecl
