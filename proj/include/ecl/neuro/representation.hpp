#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecl/core/types.hpp"
#include "ecl/neuro/stats.hpp"

namespace ecl::neuro {

/// Mean row of `states` (episodes x units) per numerosity 1..10, as a
/// 10 x units matrix. Throws IncompleteCoverageError if a numerosity is absent.
Mat<double> class_means(const Mat<double>& states, std::span<const int> labels);

struct Tuning {
  Mat<double> curves;              // units x 10
  Vec<double> selectivity;         // S = sigma / (mu + eps), population sigma
  std::vector<bool> selective;     // top ceil(0.1 U) units by S
  std::vector<int> preferred;      // argmax of curve, 1-based
};

double selectivity_index(const Vec<double>& curve, double eps = 1e-8);

Tuning tuning_and_selectivity(const Mat<double>& states, std::span<const int> labels);

enum class DetectorClass { None, Positive, Negative };
const char* to_string(DetectorClass c);

struct DetectorResult {
  std::vector<DetectorClass> classes;
  std::vector<double> rho;
  std::vector<double> p_value;
  int positive = 0;
  int negative = 0;
  // Log fits of the class-mean tuning curves; r2 is NaN for an empty class.
  LinearFit positive_log_fit;
  LinearFit negative_log_fit;
};

/// Spearman rho of each curve against 1..10 with a permutation p-value;
/// positive or negative when p < alpha.
DetectorResult classify_detectors(const Mat<double>& curves, int permutations, std::uint64_t seed,
                                  double alpha = 0.05);

/// D[i][j] = |mu_i - mu_j| over rows of `means` (10 x units).
Mat<double> compute_rdm(const Mat<double>& means);

/// Spearman rho between the 45 upper-triangle entries of `rdm` and |i - j|.
/// The p-value permutes numerosity labels (rows and columns together).
PermutationTest rsa_spearman(const Mat<double>& rdm, int permutations, std::uint64_t seed);

struct DistanceStructure {
  std::vector<double> adjacent;  // d(n, n+1), n = 1..9
  LinearFit adjacent_linear;
  LinearFit adjacent_log;
  std::vector<double> ratio;     // min/max over pairs i < j
  std::vector<double> distance;
  LinearFit ratio_linear;
  LinearFit weber;               // d = c (1 - ratio)
};

DistanceStructure distance_structure(const Mat<double>& rdm);

}  // namespace ecl::neuro
