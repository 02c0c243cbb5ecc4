#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecl/models/embodied.hpp"
#include "ecl/neuro/dynamics.hpp"
#include "ecl/neuro/representation.hpp"
#include "json.hpp"

namespace ecl::neuro {

struct AnalysisOptions {
  int rsa_layer = 2;                  // layer exported to rdm.csv
  std::string checkpoint = "final";   // or "best"
  int permutations = 10000;
  std::uint64_t seed = 0;
  int pca_dims = 6;                   // K before jPCA
  int gradcam_block = 3;
  int gradcam_per_numerosity = 1;     // episodes per numerosity exported as PGM
};

/// Eval-mode activations of a set of episodes.
struct TraceSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::array<std::vector<Mat<double>>, 2> layers;  // per layer, per episode: T x hidden
  Mat<double> visual_mean;                          // episodes x visual, mean over frames

  /// Final-timestep hidden states of `layer` (1 or 2), episodes x hidden.
  Mat<double> final_states(int layer) const;
};

TraceSet collect_traces(const EmbodiedParams<float>& params, std::span<const SequenceInput<float>> episodes);

/// Per-numerosity mean trajectory (n x hidden for numerosity n).
std::map<int, Mat<double>> condition_mean_trajectories(const TraceSet& traces, int layer);

struct JpcaReport {
  std::optional<double> r2;
  double omega = 0.0;
  std::optional<double> quality;
  double rotation_fraction = 0.0;
  double rotation_fraction_plane = 0.0;
  std::vector<double> phases_deg;
  std::optional<double> pearson_r;
  std::optional<double> slope_deg;
  bool has_rotation = false;
};

/// PCA to `k` dims over all condition-mean states, linear dynamics on
/// trajectories of length >= 2, jPCA plane, quality and terminal phases.
JpcaReport jpca_analysis(const std::map<int, Mat<double>>& trajectories, int k);

struct LayerReport {
  int layer = 0;
  Tuning tuning;
  DetectorResult detectors;
  Mat<double> rdm;
  PermutationTest rsa;
  DistanceStructure distance;
  JpcaReport jpca;
};

LayerReport analyze_layer(const TraceSet& traces, int layer, const AnalysisOptions& options);

/// Full analysis of an embodied run's validation split; writes the
/// `analysis/` directory and returns a JSON summary.
nlohmann::json analyze_run(const std::filesystem::path& run_dir, const AnalysisOptions& options = {});

}  // namespace ecl::neuro
