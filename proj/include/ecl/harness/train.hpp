#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "ecl/harness/config.hpp"
#include "ecl/harness/evaluate.hpp"

namespace ecl::harness {

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double val_count_acc = 0.0;
  std::optional<double> val_motor_mse;
  double train_loss = 0.0;
  std::array<double, kNumClasses> per_number{};
};

struct TrainRecord {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;  // max val accuracy, ties to the earliest epoch
};

struct TrainData {
  std::vector<SequenceInput<float>> train;
  std::vector<SequenceInput<float>> val;
};

/// Loads the config's fraction subset and the validation split.
TrainData load_train_data(const RunConfig& config);

/// Trains and writes config.json, learning_curve.csv, per_number.csv,
/// checkpoint_best.bin and checkpoint_final.bin into `run_dir`. The final
/// checkpoint is written last and marks the run as complete.
TrainRecord train(const RunConfig& config, const TrainData& data, const std::filesystem::path& run_dir,
                  std::ostream* log = nullptr);
TrainRecord train(const RunConfig& config, std::ostream* log = nullptr);

bool run_complete(const std::filesystem::path& run_dir);

using ModelParams = std::variant<EmbodiedParams<float>, VisionParams<float>>;

struct LoadedRun {
  RunConfig config;
  ModelParams params;
  std::int64_t epoch = 0;
};

/// Reads config.json and restores `checkpoint_<which>.bin` ("final" or "best").
LoadedRun load_run(const std::filesystem::path& run_dir, const std::string& which = "final");

std::string learning_curve_csv(const TrainRecord& record, bool motor_column_active);
std::string per_number_csv(const TrainRecord& record);

}  // namespace ecl::harness
