#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ecl/autodiff/params.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/core/types.hpp"

namespace ecl {

/// Channels x (height * width) activations; pixel index is y * width + x.
template <typename Scalar>
struct FeatureMap {
  RowMat<Scalar> data;
  int height = 0;
  int width = 0;

  FeatureMap() = default;
  FeatureMap(RowMat<Scalar> d, int h, int w) : data(std::move(d)), height(h), width(w) {}
  static FeatureMap zeros(int channels, int h, int w) {
    return {RowMat<Scalar>::Zero(channels, static_cast<Index>(h) * w), h, w};
  }

  int channels() const { return static_cast<int>(data.rows()); }
  Index pixels() const { return data.cols(); }
};

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  int output_extent(int input) const { return (input + 2 * padding - kernel) / stride + 1; }
};

template <typename Scalar>
struct ConvCache {
  RowMat<Scalar> columns;  // (in_channels * k * k) x (out pixels)
  int in_height = 0;
  int in_width = 0;
};

namespace detail {

// Output columns [lo, hi) whose input column ox * stride - padding + kx is in range.
inline void valid_range(int out, int in, ConvGeometry g, int kx, int& lo, int& hi) {
  const int offset = kx - g.padding;
  lo = offset >= 0 ? 0 : (-offset + g.stride - 1) / g.stride;
  hi = in - offset <= 0 ? 0 : std::min(out, (in - offset - 1) / g.stride + 1);
  if (hi < lo) hi = lo;
}

template <typename Scalar>
void im2col(const FeatureMap<Scalar>& x, ConvGeometry g, int out_h, int out_w, RowMat<Scalar>& cols) {
  const int k = g.kernel;
  cols.setZero(static_cast<Index>(x.channels()) * k * k, static_cast<Index>(out_h) * out_w);
  for (int c = 0; c < x.channels(); ++c) {
    const Scalar* src = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = cols.row((static_cast<Index>(c) * k + ky) * k + kx).data();
        int lo, hi;
        valid_range(out_w, x.width, g, kx, lo, hi);
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= x.height) continue;
          const Scalar* in_row = src + static_cast<Index>(iy) * x.width + kx - g.padding;
          Scalar* out_row = dst + static_cast<Index>(oy) * out_w;
          for (int ox = lo; ox < hi; ++ox) out_row[ox] = in_row[ox * g.stride];
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const RowMat<Scalar>& dcols, ConvGeometry g, int out_h, int out_w, FeatureMap<Scalar>& dx) {
  const int k = g.kernel;
  for (int c = 0; c < dx.channels(); ++c) {
    Scalar* dst = dx.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* src = dcols.row((static_cast<Index>(c) * k + ky) * k + kx).data();
        int lo, hi;
        valid_range(out_w, dx.width, g, kx, lo, hi);
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= dx.height) continue;
          Scalar* in_row = dst + static_cast<Index>(iy) * dx.width + kx - g.padding;
          const Scalar* out_row = src + static_cast<Index>(oy) * out_w;
          for (int ox = lo; ox < hi; ++ox) in_row[ox * g.stride] += out_row[ox];
        }
      }
    }
  }
}

}  // namespace detail

/// Pre-activation convolution output W * patch(x) + b; the nonlinearity is a
/// separate op.
template <typename Scalar>
FeatureMap<Scalar> conv2d(const FeatureMap<Scalar>& x, const RowMat<Scalar>& weight,
                          const Vec<Scalar>& bias, ConvGeometry g, ConvCache<Scalar>* cache = nullptr) {
  if (g.stride < 1 || g.kernel < 1 || g.padding < 0) throw DimensionError("conv2d: invalid geometry");
  if (weight.cols() != static_cast<Index>(x.channels()) * g.kernel * g.kernel) {
    throw DimensionError("conv2d: weight has " + std::to_string(weight.cols()) + " columns, expected " +
                         std::to_string(x.channels() * g.kernel * g.kernel));
  }
  if (bias.size() != weight.rows()) throw DimensionError("conv2d: bias size mismatch");
  if (x.pixels() != static_cast<Index>(x.height) * x.width) throw DimensionError("conv2d: input extent mismatch");
  const int out_h = g.output_extent(x.height);
  const int out_w = g.output_extent(x.width);
  if (out_h < 1 || out_w < 1) throw DimensionError("conv2d: empty output");

  RowMat<Scalar> local;
  RowMat<Scalar>& cols = cache ? cache->columns : local;
  detail::im2col(x, g, out_h, out_w, cols);
  if (cache) {
    cache->in_height = x.height;
    cache->in_width = x.width;
  }
  FeatureMap<Scalar> y;
  y.height = out_h;
  y.width = out_w;
  y.data.noalias() = weight * cols;
  y.data.colwise() += bias;
  ECL_ASSERT_FINITE(y.data, "conv2d output");
  return y;
}

/// Accumulates weight and bias gradients; returns the input gradient.
template <typename Scalar>
FeatureMap<Scalar> conv2d_backward(const FeatureMap<Scalar>& dy, const RowMat<Scalar>& weight,
                                   const ConvCache<Scalar>& cache, ConvGeometry g,
                                   RowMat<Scalar>& d_weight, Vec<Scalar>& d_bias) {
  if (dy.channels() != weight.rows() || dy.pixels() != cache.columns.cols()) {
    throw DimensionError("conv2d_backward: gradient shape mismatch");
  }
  d_weight.noalias() += dy.data * cache.columns.transpose();
  d_bias += dy.data.rowwise().sum();
  const RowMat<Scalar> dcols = weight.transpose() * dy.data;
  auto dx = FeatureMap<Scalar>::zeros(static_cast<int>(weight.cols() / (g.kernel * g.kernel)),
                                      cache.in_height, cache.in_width);
  detail::col2im(dcols, g, dy.height, dy.width, dx);
  ECL_ASSERT_FINITE(dx.data, "conv2d input gradient");
  return dx;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// dy masked by y > 0, where y is the ReLU output.
template <typename DerivedY, typename DerivedG>
auto relu_backward(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedG>& dy) {
  using Scalar = typename DerivedY::Scalar;
  return (y.array() > Scalar(0)).select(dy, Scalar(0));
}

template <typename Scalar>
struct PoolCache {
  std::vector<Index> argmax;  // input pixel per (channel, output pixel), row-major
  int in_height = 0;
  int in_width = 0;
};

/// 2x2 max-pool, stride 2; odd trailing rows/columns are dropped.
template <typename Scalar>
FeatureMap<Scalar> max_pool2(const FeatureMap<Scalar>& x, PoolCache<Scalar>* cache = nullptr) {
  const int oh = x.height / 2;
  const int ow = x.width / 2;
  if (oh < 1 || ow < 1) throw DimensionError("max_pool2: input smaller than 2x2");
  auto y = FeatureMap<Scalar>::zeros(x.channels(), oh, ow);
  if (cache) {
    cache->argmax.assign(static_cast<std::size_t>(x.channels()) * oh * ow, 0);
    cache->in_height = x.height;
    cache->in_width = x.width;
  }
  for (int c = 0; c < x.channels(); ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        Index best = static_cast<Index>(2 * oy) * x.width + 2 * ox;
        Scalar best_v = x.data(c, best);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const Index idx = static_cast<Index>(2 * oy + dy) * x.width + 2 * ox + dx;
            if (x.data(c, idx) > best_v) {
              best_v = x.data(c, idx);
              best = idx;
            }
          }
        }
        const Index o = static_cast<Index>(oy) * ow + ox;
        y.data(c, o) = best_v;
        if (cache) cache->argmax[static_cast<std::size_t>(c) * oh * ow + o] = best;
      }
    }
  }
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> max_pool2_backward(const FeatureMap<Scalar>& dy, const PoolCache<Scalar>& cache) {
  auto dx = FeatureMap<Scalar>::zeros(dy.channels(), cache.in_height, cache.in_width);
  const Index n = dy.pixels();
  for (int c = 0; c < dy.channels(); ++c)
    for (Index o = 0; o < n; ++o) dx.data(c, cache.argmax[static_cast<std::size_t>(c) * n + o]) += dy.data(c, o);
  return dx;
}

template <typename Scalar>
Vec<Scalar> global_average_pool(const FeatureMap<Scalar>& x) {
  return x.data.rowwise().mean();
}

template <typename Scalar>
FeatureMap<Scalar> global_average_pool_backward(const Vec<Scalar>& dv, int height, int width) {
  const Index n = static_cast<Index>(height) * width;
  FeatureMap<Scalar> dx;
  dx.height = height;
  dx.width = width;
  dx.data = (dv / Scalar(n)).replicate(1, n);
  return dx;
}

template <typename Scalar>
Vec<Scalar> linear(const LinearParams<Scalar>& p, const Vec<Scalar>& x) {
  if (x.size() != p.in_features()) {
    throw DimensionError("linear: input has " + std::to_string(x.size()) + " features, expected " +
                         std::to_string(p.in_features()));
  }
  return p.weight * x + p.bias;
}

/// Accumulates parameter gradients; returns dL/dx.
template <typename Scalar>
Vec<Scalar> linear_backward(const LinearParams<Scalar>& p, const Vec<Scalar>& x, const Vec<Scalar>& dy,
                            LinearParams<Scalar>& grads) {
  grads.weight.noalias() += dy * x.transpose();
  grads.bias += dy;
  return p.weight.transpose() * dy;
}

}  // namespace ecl
