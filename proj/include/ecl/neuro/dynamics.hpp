#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ecl/core/types.hpp"

namespace ecl::neuro {

struct PcaResult {
  Vec<double> mean;
  Mat<double> components;      // dims x K, orthonormal columns
  Mat<double> projections;     // rows x K
  Vec<double> explained_ratio; // non-increasing
  bool reduced_rank = false;   // fewer than the requested K components had variance
};

/// Top-K principal components of mean-centered `data` (rows x dims). Each
/// component's first non-negligible coefficient is positive.
PcaResult pca(const Mat<double>& data, int k);

struct DynamicsFit {
  Mat<double> M;
  std::optional<double> r2;  // empty when every velocity is zero
  bool rank_deficient = false;
};

/// Least-squares M in x_{t+1} - x_t = M x_t over all steps of all
/// trajectories (each T x K). R^2 is uncentered: 1 - SS_res / sum |xdot|^2.
DynamicsFit fit_linear_dynamics(const std::vector<Mat<double>>& trajectories);

struct JpcaPlane {
  Mat<double> M_skew;
  Mat<double> basis;  // K x 2, orthonormal, oriented so rotation is counter-clockwise
  double omega = 0.0; // rad per step
  double rotation_fraction = 0.0;        // |M_skew|_F^2 / |M|_F^2 over all K dims
  double rotation_fraction_plane = 0.0;  // same ratio for M restricted to the plane
  bool has_rotation = false;
};

JpcaPlane jpca_plane(const Mat<double>& M);

/// Each trajectory (T x K) projected to T x 2 plane coordinates.
std::vector<Mat<double>> project(const std::vector<Mat<double>>& trajectories, const Mat<double>& basis);

/// Mean |sin| of the angle between x_t and x_{t+1} - x_t in the plane.
double rotation_quality(const std::vector<Mat<double>>& projected);

struct PhaseRegression {
  std::vector<double> phases_deg;  // unwrapped, indexed by numerosity - 1
  double slope_deg = 0.0;
  std::optional<double> pearson_r;  // empty when phases do not vary
};

/// Terminal phase of each numerosity's projected trajectory (keyed 1..N),
/// unwrapped from N = 1 onward, regressed on N.
PhaseRegression terminal_phase_regression(const std::map<int, Mat<double>>& projected_by_count);

}  // namespace ecl::neuro
