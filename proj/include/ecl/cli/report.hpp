#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecl/harness/config.hpp"
#include "ecl/models/widths.hpp"
#include "json.hpp"

namespace ecl::cli {

struct LayerSummary {
  int layer = 0;
  std::optional<double> rsa_rho, rsa_p;
  std::optional<double> jpca_r, jpca_slope_deg, jpca_quality;
};

struct RunSummary {
  std::string id;
  harness::RunConfig config;
  int epochs = 0;
  int best_epoch = 0;
  double best_acc = 0.0;
  std::optional<double> best_motor_mse;  // at the best epoch
  bool best_acc_in_fraction = false;
  bool best_mse_in_fraction = false;
  std::vector<LayerSummary> layers;  // empty without an analysis
  /// First epoch with per-number accuracy >= threshold; epochs + 1 if never.
  std::array<int, kNumClasses> epoch_to_threshold{};
  /// Spearman rho between numerosity and epoch_to_threshold with its
  /// two-sided permutation p-value; empty when every number crossed together.
  std::optional<double> acquisition_rho, acquisition_p;
};

struct SummaryReport {
  double threshold = 0.8;
  std::vector<RunSummary> runs;  // sorted by id
};

/// Epoch-to-threshold from a per-number table (rows epoch, columns 1..10).
std::array<int, kNumClasses> epoch_to_threshold(const std::vector<std::array<double, kNumClasses>>& per_epoch,
                                                double threshold);

/// Summarizes one completed run directory.
RunSummary summarize_run(const std::filesystem::path& run_dir, double threshold);

/// Summarizes every completed run directly under `root`. Throws
/// EmptyReportError when there is none.
SummaryReport build_report(const std::filesystem::path& root, double threshold = 0.8);

std::string report_csv(const SummaryReport& r);
nlohmann::json report_json(const SummaryReport& r);

/// Writes summary.csv and summary.json into `root`.
void write_report(const SummaryReport& r, const std::filesystem::path& root);

}  // namespace ecl::cli
