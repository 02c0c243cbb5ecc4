#pragma once

#include <string>
#include <type_traits>
#include <vector>

#include "ecl/core/errors.hpp"
#include "ecl/core/types.hpp"

namespace ecl {

/// Flat, named view of one parameter tensor. `T` is `Scalar` or
/// `const Scalar`; the storage is owned by a parameter struct.
template <typename T>
struct NamedParam {
  std::string name;
  std::vector<Index> shape;
  T* data = nullptr;
  Index size = 0;

  auto flat() const { return Eigen::Map<std::conditional_t<std::is_const_v<T>,
                                                           const Vec<std::remove_const_t<T>>,
                                                           Vec<T>>>(data, size); }
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

inline std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

/// Parameter structs expose `visit_named(prefix, sink)`, calling
/// `sink(name, shape, eigen_object)` for every tensor in a fixed order.
template <typename Params>
auto param_list(Params& params) {
  using Scalar = typename std::remove_const_t<Params>::Scalar;
  using T = std::conditional_t<std::is_const_v<Params>, const Scalar, Scalar>;
  ParamList<T> out;
  params.visit_named("", [&](const std::string& name, std::vector<Index> shape, auto& tensor) {
    out.push_back({name, std::move(shape), tensor.data(), tensor.size()});
  });
  return out;
}

template <typename Params>
void set_zero(Params& params) {
  for (auto& p : param_list(params)) p.flat().setZero();
}

template <typename Params>
Params zeros_like(const Params& params) {
  Params out = params;
  set_zero(out);
  return out;
}

/// y += alpha * x over matching parameter structs.
template <typename Params>
void accumulate(Params& y, const Params& x, typename Params::Scalar alpha = 1) {
  auto ys = param_list(y);
  const auto xs = param_list(x);
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i].flat() += alpha * xs[i].flat();
}

template <typename Params>
void scale(Params& y, typename Params::Scalar alpha) {
  for (auto& p : param_list(y)) p.flat() *= alpha;
}

template <typename Params>
Index parameter_count(const Params& params) {
  Index n = 0;
  for (const auto& p : param_list(params)) n += p.size;
  return n;
}

template <typename Params>
bool all_finite(const Params& params) {
  for (const auto& p : param_list(params))
    if (!p.flat().allFinite()) return false;
  return true;
}

template <typename S>
struct LinearParams {
  using Scalar = S;
  RowMat<Scalar> weight;  // out x in
  Vec<Scalar> bias;       // out

  LinearParams() = default;
  LinearParams(Index in, Index out) : weight(RowMat<Scalar>::Zero(out, in)), bias(Vec<Scalar>::Zero(out)) {}

  Index in_features() const { return weight.cols(); }
  Index out_features() const { return weight.rows(); }

  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) {
    sink(join_name(prefix, "weight"), {weight.rows(), weight.cols()}, weight);
    sink(join_name(prefix, "bias"), {bias.size()}, bias);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const {
    sink(join_name(prefix, "weight"), {weight.rows(), weight.cols()}, weight);
    sink(join_name(prefix, "bias"), {bias.size()}, bias);
  }
};

/// Convolution weights as (out_channels) x (in_channels * k * k); the logical
/// shape is [out, in, k, k].
template <typename S>
struct ConvParams {
  using Scalar = S;
  RowMat<Scalar> weight;
  Vec<Scalar> bias;
  int in_channels = 0;
  int kernel = 3;

  ConvParams() = default;
  ConvParams(int in, int out, int k)
      : weight(RowMat<Scalar>::Zero(out, static_cast<Index>(in) * k * k)),
        bias(Vec<Scalar>::Zero(out)),
        in_channels(in),
        kernel(k) {}

  int out_channels() const { return static_cast<int>(weight.rows()); }

  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) {
    sink(join_name(prefix, "weight"), {weight.rows(), in_channels, kernel, kernel}, weight);
    sink(join_name(prefix, "bias"), {bias.size()}, bias);
  }
  template <typename Sink>
  void visit_named(const std::string& prefix, Sink&& sink) const {
    sink(join_name(prefix, "weight"), {weight.rows(), in_channels, kernel, kernel}, weight);
    sink(join_name(prefix, "bias"), {bias.size()}, bias);
  }
};

}  // namespace ecl
