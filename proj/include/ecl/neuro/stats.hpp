#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ecl::neuro {

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Throws UndefinedStatisticError when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct PermutationTest {
  double statistic = 0.0;
  double p_value = 1.0;  // two-sided, (1 + #{|perm| >= |obs|}) / (1 + n)
};

/// Spearman rho with a permutation p-value from shuffling y.
PermutationTest spearman_permutation_test(std::span<const double> x, std::span<const double> y, int permutations,
                                          std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // NaN when y has zero variance
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);
/// y = slope * ln(x) + intercept.
LinearFit fit_log(std::span<const double> x, std::span<const double> y);
/// y = slope * x with no intercept; R^2 is still measured about the mean of y.
LinearFit fit_through_origin(std::span<const double> x, std::span<const double> y);

}  // namespace ecl::neuro
