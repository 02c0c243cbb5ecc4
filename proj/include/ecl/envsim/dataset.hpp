#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecl/envsim/render.hpp"
#include "ecl/envsim/scene.hpp"

namespace ecl::envsim {

/// Largest-remainder apportionment of `total` proportional to `weights`.
/// Ties in the remainder go to the lower index.
std::vector<int> apportion(int total, std::span<const double> weights);

/// Zipf-like per-numerosity episode counts for numerosities 1..n_max.
/// Every numerosity gets at least one episode; the remainder follows the
/// empirical robot-dataset profile (405, 206, ..., 40 for 1..10), extended as
/// 405/n beyond 10. Throws InfeasibleDistributionError when total < n_max.
std::vector<int> zipf_counts(int total, int n_max);

enum class Split { train, val };

struct ManifestEntry {
  std::string id;
  int count = 0;
  Split split = Split::train;
};

struct DatasetConfig {
  int total = 1188;
  int n_max = 10;
  int val_size = 242;
  std::vector<int> subset_sizes{94, 472, 946};  // nested 10% / 50% / 100% of train
  RenderConfig render{};

  /// Defaults rescaled to a different total (validation share and subset
  /// fractions preserved).
  static DatasetConfig scaled(int total, int image_size);
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  DatasetConfig config;
  std::vector<ManifestEntry> episodes;
  // Keys "0.1", "0.5", "1.0"; each a prefix of the next.
  std::map<std::string, std::vector<std::string>> fraction_subsets;

  const std::vector<std::string>& subset(double fraction) const;
  std::vector<std::string> validation_ids() const;
  const ManifestEntry& entry(const std::string& id) const;
};

struct Dataset {
  DatasetManifest manifest;
  std::map<std::string, Episode> episodes;

  const Episode& episode(const std::string& id) const;
};

/// Scene for episode `index` of a dataset generated with `seed`.
WorkspaceScene sample_scene(std::uint64_t seed, std::size_t index, int count,
                            const RenderConfig& config);

/// Greedy nearest-unvisited visiting order starting from the arm home point.
std::vector<std::size_t> visitation_order(const WorkspaceScene& scene);

Episode build_episode(const std::string& id, const WorkspaceScene& scene,
                      const RenderConfig& config);

DatasetManifest generate_manifest(std::uint64_t seed, const DatasetConfig& config);

Dataset generate_dataset(std::uint64_t seed, const DatasetConfig& config);

/// Directory layout: manifest.json plus episodes/<id>/{frames.bin,shape.json,joints.csv}.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

/// Loads the manifest and the requested episodes (all when `ids` is empty).
Dataset load_dataset(const std::filesystem::path& dir, std::span<const std::string> ids = {});

}  // namespace ecl::envsim
