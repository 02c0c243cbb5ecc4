#include "ecl/neuro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecl/core/errors.hpp"
#include "ecl/core/rng.hpp"

namespace ecl::neuro {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) throw DimensionError(std::string(what) + ": length mismatch");
  if (x.size() < 2) throw UndefinedStatisticError(std::string(what) + ": need at least two points");
}

double r_squared(std::span<const double> y, const std::vector<double>& fitted) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatisticError("correlation undefined: zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

PermutationTest spearman_permutation_test(std::span<const double> x, std::span<const double> y, int permutations,
                                          std::uint64_t seed) {
  PermutationTest out;
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  out.statistic = pearson(rx, ry);
  if (permutations < 1) return out;
  Rng rng(seed);
  int extreme = 0;
  const double threshold = std::abs(out.statistic) - 1e-12;
  for (int i = 0; i < permutations; ++i) {
    fisher_yates(ry, rng);
    if (std::abs(pearson(rx, ry)) >= threshold) ++extreme;
  }
  out.p_value = (1.0 + extreme) / (1.0 + permutations);
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "fit_line");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw UndefinedStatisticError("fit_line: regressor has zero variance");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  std::vector<double> fitted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = f.slope * x[i] + f.intercept;
  f.r2 = r_squared(y, fitted);
  return f;
}

LinearFit fit_log(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw DimensionError("fit_log: regressor must be positive");
    lx[i] = std::log(x[i]);
  }
  return fit_line(lx, y);
}

LinearFit fit_through_origin(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "fit_through_origin");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  if (sxx == 0.0) throw UndefinedStatisticError("fit_through_origin: regressor is identically zero");
  LinearFit f;
  f.slope = sxy / sxx;
  std::vector<double> fitted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = f.slope * x[i];
  f.r2 = r_squared(y, fitted);
  return f;
}

}  // namespace ecl::neuro
