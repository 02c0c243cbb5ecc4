#include "ecl/neuro/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ecl/core/errors.hpp"
#include "ecl/neuro/stats.hpp"

namespace ecl::neuro {

PcaResult pca(const Mat<double>& data, int k) {
  if (k < 1 || data.rows() < k) throw DimensionError("pca: need rows >= K >= 1");
  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  const Mat<double> centered = data.rowwise() - r.mean.transpose();
  const Mat<double> cov = centered.transpose() * centered / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Mat<double>> eig(cov);
  const Vec<double> values = eig.eigenvalues().reverse();
  const Mat<double> vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.cwiseMax(0.0).sum();
  const double tol = std::max(1e-12 * values.cwiseAbs().maxCoeff(), 1e-300);
  int available = 0;
  while (available < k && available < values.size() && values(available) > tol) ++available;
  r.reduced_rank = available < k;
  const int kept = std::max(available, 1);
  r.components = vectors.leftCols(kept);
  for (int c = 0; c < kept; ++c) {
    auto col = r.components.col(c);
    for (Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
  }
  r.explained_ratio = total > 0 ? Vec<double>(values.head(kept).cwiseMax(0.0) / total) : Vec<double>::Zero(kept);
  r.projections = centered * r.components;
  return r;
}

DynamicsFit fit_linear_dynamics(const std::vector<Mat<double>>& trajectories) {
  Index rows = 0, dims = -1;
  for (const auto& t : trajectories) {
    if (t.rows() < 2) throw DimensionError("fit_linear_dynamics: every trajectory needs at least two points");
    if (dims >= 0 && t.cols() != dims) throw DimensionError("fit_linear_dynamics: inconsistent dimensions");
    dims = t.cols();
    rows += t.rows() - 1;
  }
  if (rows == 0) throw EmptySequenceError("fit_linear_dynamics: no trajectories");
  Mat<double> X(rows, dims), dX(rows, dims);
  Index r = 0;
  for (const auto& t : trajectories) {
    const Index n = t.rows() - 1;
    X.middleRows(r, n) = t.topRows(n);
    dX.middleRows(r, n) = t.bottomRows(n) - t.topRows(n);
    r += n;
  }
  DynamicsFit fit;
  Eigen::CompleteOrthogonalDecomposition<Mat<double>> cod(X);
  fit.rank_deficient = cod.rank() < dims;
  // Solve X M^T = dX in the minimum-norm least-squares sense.
  fit.M = cod.solve(dX).transpose();
  const double ss_tot = dX.squaredNorm();
  if (ss_tot > 0.0) fit.r2 = 1.0 - (dX - X * fit.M.transpose()).squaredNorm() / ss_tot;
  return fit;
}

JpcaPlane jpca_plane(const Mat<double>& M) {
  if (M.rows() != M.cols() || M.rows() < 2) throw DimensionError("jpca_plane: need a square matrix of size >= 2");
  JpcaPlane out;
  const Index k = M.rows();
  out.M_skew = 0.5 * (M - M.transpose());
  const double m_norm = M.squaredNorm();
  out.rotation_fraction = m_norm > 0 ? out.M_skew.squaredNorm() / m_norm : 0.0;
  out.basis = Mat<double>::Zero(k, 2);
  out.basis(0, 0) = 1.0;
  out.basis(1, 1) = 1.0;
  if (out.M_skew.cwiseAbs().maxCoeff() < 1e-14) return out;

  Eigen::EigenSolver<Mat<double>> eig(out.M_skew);
  Index best = 0;
  for (Index i = 1; i < k; ++i)
    if (eig.eigenvalues()(i).imag() > eig.eigenvalues()(best).imag()) best = i;
  out.omega = eig.eigenvalues()(best).imag();
  if (!(out.omega > 0.0)) return out;
  out.has_rotation = true;
  const Eigen::VectorXcd v = eig.eigenvectors().col(best);
  Vec<double> b1 = v.real();
  Vec<double> b2 = v.imag();
  b1.normalize();
  b2 -= b1.dot(b2) * b1;
  b2.normalize();
  if (b2.dot(out.M_skew * b1) < 0) b2 = -b2;
  out.basis.col(0) = b1;
  out.basis.col(1) = b2;
  const Mat<double> m_plane = out.basis.transpose() * M * out.basis;
  const double plane_norm = m_plane.squaredNorm();
  out.rotation_fraction_plane =
      plane_norm > 0 ? (0.5 * (m_plane - m_plane.transpose())).squaredNorm() / plane_norm : 0.0;
  return out;
}

std::vector<Mat<double>> project(const std::vector<Mat<double>>& trajectories, const Mat<double>& basis) {
  std::vector<Mat<double>> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) out.push_back(t * basis);
  return out;
}

double rotation_quality(const std::vector<Mat<double>>& projected) {
  double sum = 0.0;
  long long valid = 0;
  for (const auto& p : projected) {
    if (p.cols() != 2) throw DimensionError("rotation_quality: expected plane coordinates");
    for (Index t = 0; t + 1 < p.rows(); ++t) {
      const double x0 = p(t, 0), x1 = p(t, 1);
      const double v0 = p(t + 1, 0) - x0, v1 = p(t + 1, 1) - x1;
      const double nx = std::hypot(x0, x1), nv = std::hypot(v0, v1);
      if (nx < 1e-12 || nv < 1e-12) continue;
      sum += std::abs(x0 * v1 - x1 * v0) / (nx * nv);
      ++valid;
    }
  }
  if (valid == 0) throw UndefinedStatisticError("rotation_quality: no step with nonzero position and velocity");
  return std::min(1.0, sum / static_cast<double>(valid));
}

PhaseRegression terminal_phase_regression(const std::map<int, Mat<double>>& projected_by_count) {
  if (projected_by_count.size() < 2) throw DimensionError("terminal_phase_regression: need at least two counts");
  PhaseRegression out;
  std::vector<double> counts;
  for (const auto& [n, traj] : projected_by_count) {
    if (traj.rows() == 0 || traj.cols() != 2) throw DimensionError("terminal_phase_regression: bad trajectory");
    const double x = traj(traj.rows() - 1, 0), y = traj(traj.rows() - 1, 1);
    if (std::hypot(x, y) < 1e-12) {
      throw UndefinedStatisticError("terminal point of numerosity " + std::to_string(n) + " is at the origin");
    }
    double phi = std::atan2(y, x) * 180.0 / std::numbers::pi;
    if (!out.phases_deg.empty()) {
      const double prev = out.phases_deg.back();
      phi += 360.0 * std::round((prev - phi) / 360.0);
    }
    out.phases_deg.push_back(phi);
    counts.push_back(static_cast<double>(n));
  }
  out.slope_deg = fit_line(counts, out.phases_deg).slope;
  try {
    out.pearson_r = pearson(counts, out.phases_deg);
  } catch (const UndefinedStatisticError&) {
    out.pearson_r.reset();
  }
  return out;
}

}  // namespace ecl::neuro
