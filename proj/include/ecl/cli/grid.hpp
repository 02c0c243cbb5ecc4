#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ecl/harness/config.hpp"
#include "ecl/neuro/analyze.hpp"
#include "json.hpp"

namespace ecl::cli {

/// A declarative set of runs sharing one dataset and output root.
///
/// JSON layout:
///   {"dataset": "data", "output_root": "runs", "seed": 0,
///    "defaults": {<run config keys>},
///    "axes": {"model": [...], "fraction": [...], "curriculum": [...],
///             "shuffle_joints": [...]},
///    "runs": [{"id": "e3", <run config keys>}, ...],
///    "analyze": {"permutations": 1000, "layer": 2}}
/// Axes expand to their cartesian product with generated ids; "runs" lists
/// explicit configurations. Every key except "dataset" is optional.
struct ExperimentGrid {
  std::filesystem::path dataset;
  std::filesystem::path output_root = "runs";
  std::uint64_t seed = 0;
  std::vector<harness::RunConfig> runs;
  /// Embodied runs are analyzed after training when set.
  std::optional<neuro::AnalysisOptions> analysis;
};

/// Expands and validates a grid: run ids must be unique, every config must be
/// valid, and every fraction must exist in the dataset manifest.
ExperimentGrid grid_from_json(const nlohmann::json& j, const std::filesystem::path& output_root_fallback = "runs");

/// Reads a grid file; ECL_OUT, when set, replaces the output root.
ExperimentGrid load_grid(const std::filesystem::path& file);

/// Throws ConfigError or DatasetIoError when the grid cannot run.
void validate_grid(const ExperimentGrid& grid);

/// Id for one axes combination, e.g. "embodied_f0.1_random_sj0".
std::string axes_run_id(const harness::RunConfig& c);

struct GridStatus {
  int trained = 0;
  int skipped = 0;
  std::vector<std::pair<std::string, std::string>> failed;  // id, message
};

/// Trains every run whose directory lacks a final checkpoint, `jobs` at a time.
GridStatus run_grid(const ExperimentGrid& grid, int jobs, std::ostream& log);

}  // namespace ecl::cli
