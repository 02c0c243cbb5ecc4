#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ecl {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Parameter storage is row-major so that a flat view is in C order of the
// logical shape (checkpoints depend on this).
template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using VecMap = Eigen::Map<Vec<Scalar>>;

template <typename Scalar>
using ConstVecMap = Eigen::Map<const Vec<Scalar>>;

constexpr int kNumClasses = 10;

}  // namespace ecl
