#pragma once

#include <filesystem>
#include <string>

#include "ecl/envsim/dataset.hpp"
#include "ecl/harness/config.hpp"

namespace ecl::testing {

/// 100 small episodes (16x16 frames); validation covers every numerosity and
/// the 0.5 subset holds 20 training episodes.
inline std::filesystem::path tiny_dataset(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ecl_test_" + name);
  std::filesystem::remove_all(dir);
  auto config = envsim::DatasetConfig::scaled(100, 16);
  config.subset_sizes = {10, 20, 80};
  envsim::write_dataset(envsim::generate_dataset(3, config), dir);
  return dir;
}

inline ModelWidths small_widths() {
  ModelWidths w;
  w.conv_channels = {4, 4, 8};
  w.visual = 8;
  w.motor_hidden = 8;
  w.motor = 8;
  w.hidden = 12;
  w.classifier_hidden = 8;
  return w;
}

inline harness::RunConfig tiny_run(const std::filesystem::path& dataset, const std::filesystem::path& root,
                                   const std::string& id) {
  harness::RunConfig c;
  c.id = id;
  c.dataset = dataset;
  c.output_root = root;
  c.fraction = 0.5;
  c.epochs = 5;
  c.batch_size = 4;
  c.seed = 7;
  c.widths = small_widths();
  c.optimizer.learning_rate = 3e-3;
  return c;
}

}  // namespace ecl::testing
