#include "ecl/neuro/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecl/core/errors.hpp"
#include "ecl/core/rng.hpp"

namespace ecl::neuro {

namespace {

std::vector<double> to_vector(const Vec<double>& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> numerosities() {
  std::vector<double> n(kNumClasses);
  std::iota(n.begin(), n.end(), 1.0);
  return n;
}

LinearFit safe_log_fit(const Vec<double>& curve) {
  const auto n = numerosities();
  const auto y = to_vector(curve);
  return fit_log(n, y);
}

LinearFit empty_fit() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan};
}

}  // namespace

Mat<double> class_means(const Mat<double>& states, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != states.rows()) throw DimensionError("class_means: label count mismatch");
  Mat<double> means = Mat<double>::Zero(kNumClasses, states.cols());
  std::vector<int> counts(kNumClasses, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > kNumClasses) throw LabelError("class_means: label out of range");
    means.row(labels[i] - 1) += states.row(static_cast<Index>(i));
    ++counts[static_cast<std::size_t>(labels[i] - 1)];
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw IncompleteCoverageError("no episodes with numerosity " + std::to_string(k + 1));
    means.row(k) /= counts[static_cast<std::size_t>(k)];
  }
  return means;
}

double selectivity_index(const Vec<double>& curve, double eps) {
  const double mu = curve.mean();
  const double sigma = std::sqrt((curve.array() - mu).square().mean());
  return sigma / (mu + eps);
}

Tuning tuning_and_selectivity(const Mat<double>& states, std::span<const int> labels) {
  Tuning t;
  t.curves = class_means(states, labels).transpose();
  if (!t.curves.allFinite()) throw UndefinedStatisticError("tuning curves contain non-finite values");
  const Index units = t.curves.rows();
  t.selectivity.resize(units);
  t.preferred.resize(static_cast<std::size_t>(units));
  for (Index u = 0; u < units; ++u) {
    const Vec<double> c = t.curves.row(u).transpose();
    t.selectivity(u) = selectivity_index(c);
    Index best = 0;
    c.maxCoeff(&best);
    t.preferred[static_cast<std::size_t>(u)] = static_cast<int>(best) + 1;
  }
  // Top ceil(10%) by S; equal S keeps the lower unit index first.
  std::vector<Index> order(static_cast<std::size_t>(units));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return t.selectivity(a) > t.selectivity(b); });
  const auto n_flag = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(units)));
  t.selective.assign(static_cast<std::size_t>(units), false);
  for (std::size_t i = 0; i < n_flag && i < order.size(); ++i) t.selective[static_cast<std::size_t>(order[i])] = true;
  return t;
}

const char* to_string(DetectorClass c) {
  switch (c) {
    case DetectorClass::Positive: return "positive";
    case DetectorClass::Negative: return "negative";
    default: return "none";
  }
}

DetectorResult classify_detectors(const Mat<double>& curves, int permutations, std::uint64_t seed, double alpha) {
  if (curves.cols() != kNumClasses) throw DimensionError("classify_detectors: curves must have 10 columns");
  DetectorResult r;
  const auto n = numerosities();
  Vec<double> pos_sum = Vec<double>::Zero(kNumClasses), neg_sum = pos_sum;
  for (Index u = 0; u < curves.rows(); ++u) {
    const auto y = to_vector(curves.row(u).transpose());
    DetectorClass cls = DetectorClass::None;
    double rho = 0.0, p = 1.0;
    // A flat curve has no monotone trend.
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) != y.end()) {
      const auto test = spearman_permutation_test(n, y, permutations, derive_seed(seed, static_cast<std::uint64_t>(u)));
      rho = test.statistic;
      p = test.p_value;
      if (p < alpha && rho > 0) cls = DetectorClass::Positive;
      if (p < alpha && rho < 0) cls = DetectorClass::Negative;
    }
    r.classes.push_back(cls);
    r.rho.push_back(rho);
    r.p_value.push_back(p);
    if (cls == DetectorClass::Positive) {
      ++r.positive;
      pos_sum += curves.row(u).transpose();
    } else if (cls == DetectorClass::Negative) {
      ++r.negative;
      neg_sum += curves.row(u).transpose();
    }
  }
  r.positive_log_fit = r.positive > 0 ? safe_log_fit(pos_sum / r.positive) : empty_fit();
  r.negative_log_fit = r.negative > 0 ? safe_log_fit(neg_sum / r.negative) : empty_fit();
  return r;
}

Mat<double> compute_rdm(const Mat<double>& means) {
  const Index k = means.rows();
  Mat<double> d = Mat<double>::Zero(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) d(i, j) = d(j, i) = (means.row(i) - means.row(j)).norm();
  return d;
}

PermutationTest rsa_spearman(const Mat<double>& rdm, int permutations, std::uint64_t seed) {
  const Index k = rdm.rows();
  if (rdm.cols() != k || k < 3) throw DimensionError("rsa_spearman: need a square RDM of size >= 3");
  std::vector<double> model, neural;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      model.push_back(static_cast<double>(j - i));
      neural.push_back(rdm(i, j));
    }
  if (std::adjacent_find(neural.begin(), neural.end(), std::not_equal_to<>()) == neural.end())
    throw UndefinedStatisticError("rsa_spearman: RDM has zero variance");
  PermutationTest out;
  const auto model_ranks = average_ranks(model);
  out.statistic = pearson(model_ranks, average_ranks(neural));
  if (permutations < 1) return out;
  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<double> permuted(neural.size());
  int extreme = 0;
  const double threshold = std::abs(out.statistic) - 1e-12;
  for (int it = 0; it < permutations; ++it) {
    fisher_yates(perm, rng);
    std::size_t idx = 0;
    for (Index i = 0; i < k; ++i)
      for (Index j = i + 1; j < k; ++j) permuted[idx++] = rdm(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    if (std::abs(pearson(model_ranks, average_ranks(permuted))) >= threshold) ++extreme;
  }
  out.p_value = (1.0 + extreme) / (1.0 + permutations);
  return out;
}

DistanceStructure distance_structure(const Mat<double>& rdm) {
  const Index k = rdm.rows();
  if (rdm.cols() != k || k < 3) throw DimensionError("distance_structure: need a square RDM of size >= 3");
  DistanceStructure s;
  std::vector<double> n;
  for (Index i = 0; i + 1 < k; ++i) {
    n.push_back(static_cast<double>(i + 1));
    s.adjacent.push_back(rdm(i, i + 1));
  }
  s.adjacent_linear = fit_line(n, s.adjacent);
  s.adjacent_log = fit_log(n, s.adjacent);
  std::vector<double> one_minus;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      s.ratio.push_back(static_cast<double>(i + 1) / static_cast<double>(j + 1));
      one_minus.push_back(1.0 - s.ratio.back());
      s.distance.push_back(rdm(i, j));
    }
  s.ratio_linear = fit_line(s.ratio, s.distance);
  s.weber = fit_through_origin(one_minus, s.distance);
  return s;
}

}  // namespace ecl::neuro
