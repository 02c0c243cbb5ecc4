#include "ecl/cli/grid.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ecl/core/csv.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/envsim/dataset.hpp"
#include "ecl/harness/train.hpp"

namespace ecl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
std::vector<T> axis_values(const json& axes, const char* key, T fallback) {
  if (!axes.contains(key)) return {fallback};
  const auto& a = axes.at(key);
  if (!a.is_array() || a.empty()) throw ConfigError(std::string("axis '") + key + "' must be a nonempty array");
  std::vector<T> out;
  try {
    for (const auto& v : a) out.push_back(v.get<T>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("axis '") + key + "': " + e.what());
  }
  return out;
}

neuro::AnalysisOptions analysis_from_json(const json& j) {
  reject_unknown(j, {"layer", "checkpoint", "permutations", "seed"}, "analyze");
  neuro::AnalysisOptions o;
  try {
    if (j.contains("layer")) o.rsa_layer = j.at("layer").get<int>();
    if (j.contains("checkpoint")) o.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("permutations")) o.permutations = j.at("permutations").get<int>();
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("analyze: ") + e.what());
  }
  if (o.rsa_layer != 1 && o.rsa_layer != 2) throw ConfigError("analyze: layer must be 1 or 2");
  if (o.checkpoint != "final" && o.checkpoint != "best") throw ConfigError("analyze: checkpoint must be final or best");
  if (o.permutations < 0) throw ConfigError("analyze: permutations must be >= 0");
  return o;
}

}  // namespace

std::string axes_run_id(const harness::RunConfig& c) {
  std::ostringstream id;
  id << harness::to_string(c.model) << "_f" << format_real(c.fraction) << "_" << harness::to_string(c.curriculum)
     << "_sj" << (c.shuffle_joints ? 1 : 0);
  return id.str();
}

ExperimentGrid grid_from_json(const json& j, const fs::path& output_root_fallback) {
  reject_unknown(j, {"dataset", "output_root", "seed", "defaults", "axes", "runs", "analyze"}, "grid");
  if (!j.contains("dataset")) throw ConfigError("grid: missing key 'dataset'");
  ExperimentGrid g;
  g.output_root = output_root_fallback;
  try {
    g.dataset = j.at("dataset").get<std::string>();
    if (j.contains("output_root")) g.output_root = j.at("output_root").get<std::string>();
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (j.contains("analyze")) g.analysis = analysis_from_json(j.at("analyze"));

  harness::RunConfig base;
  base.dataset = g.dataset;
  base.output_root = g.output_root;
  base.seed = g.seed;
  const json defaults = j.value("defaults", json::object());
  for (const char* k : {"id", "dataset", "output_root"})
    if (defaults.is_object() && defaults.contains(k)) throw ConfigError(std::string("grid defaults may not set '") + k + "'");
  base = harness::run_config_from_json(defaults, base);

  if (j.contains("axes")) {
    const auto& axes = j.at("axes");
    reject_unknown(axes, {"model", "fraction", "curriculum", "shuffle_joints"}, "axes");
    const auto models = axis_values<std::string>(axes, "model", harness::to_string(base.model));
    const auto fractions = axis_values<double>(axes, "fraction", base.fraction);
    const auto curricula = axis_values<std::string>(axes, "curriculum", harness::to_string(base.curriculum));
    const auto shuffles = axis_values<bool>(axes, "shuffle_joints", base.shuffle_joints);
    for (const auto& m : models)
      for (double f : fractions)
        for (const auto& c : curricula)
          for (bool s : shuffles) {
            harness::RunConfig r = base;
            r.model = harness::parse_model_kind(m);
            r.fraction = f;
            r.curriculum = harness::parse_curriculum(c);
            r.shuffle_joints = s;
            // The shuffle axis only applies to the embodied model.
            if (s && r.model != harness::ModelKind::Embodied) continue;
            r.id = axes_run_id(r);
            g.runs.push_back(r);
          }
  }
  if (j.contains("runs")) {
    const auto& runs = j.at("runs");
    if (!runs.is_array()) throw ConfigError("grid: 'runs' must be an array");
    for (const auto& entry : runs) {
      if (!entry.is_object() || !entry.contains("id")) throw ConfigError("grid: every run needs an 'id'");
      for (const char* k : {"dataset", "output_root"})
        if (entry.contains(k)) throw ConfigError(std::string("grid runs may not set '") + k + "'");
      g.runs.push_back(harness::run_config_from_json(entry, base));
    }
  }
  if (g.runs.empty()) throw ConfigError("grid defines no runs");
  return g;
}

ExperimentGrid load_grid(const fs::path& file) {
  const auto j = harness::parse_json_text(read_text_file(file), file.string());
  auto g = grid_from_json(j);
  const auto root = harness::output_root_override(g.output_root);
  g.output_root = root;
  for (auto& r : g.runs) r.output_root = root;
  validate_grid(g);
  return g;
}

void validate_grid(const ExperimentGrid& grid) {
  std::set<std::string> ids;
  for (const auto& r : grid.runs) {
    if (!ids.insert(r.id).second) throw ConfigError("duplicate run id '" + r.id + "'");
    r.validate();
  }
  const auto manifest_path = grid.dataset / "manifest.json";
  if (!fs::exists(manifest_path)) throw DatasetIoError("dataset not found: " + manifest_path.string());
  const auto manifest = envsim::manifest_from_json(read_text_file(manifest_path));
  for (const auto& r : grid.runs) {
    try {
      if (manifest.subset(r.fraction).empty()) throw std::out_of_range("empty");
    } catch (const std::out_of_range&) {
      throw ConfigError("run " + r.id + ": fraction " + format_real(r.fraction) + " is not in the dataset manifest");
    }
  }
}

GridStatus run_grid(const ExperimentGrid& grid, int jobs, std::ostream& log) {
  if (jobs < 1) throw ConfigError("jobs must be positive");
  validate_grid(grid);
  GridStatus status;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  const bool serial = jobs == 1 || grid.runs.size() == 1;

  auto worker = [&] {
    for (std::size_t i = next++; i < grid.runs.size(); i = next++) {
      const auto& run = grid.runs[i];
      try {
        bool trained = false;
        if (!harness::run_complete(run.run_dir())) {
          {
            std::lock_guard lock(mutex);
            log << "[" << run.id << "] training\n";
          }
          harness::train(run, serial ? &log : nullptr);
          trained = true;
        }
        if (grid.analysis && run.model == harness::ModelKind::Embodied &&
            !fs::exists(run.run_dir() / "analysis" / "summary.json")) {
          {
            std::lock_guard lock(mutex);
            log << "[" << run.id << "] analyzing\n";
          }
          try {
            neuro::analyze_run(run.run_dir(), *grid.analysis);
          } catch (const std::exception& e) {
            throw Error(std::string("analysis: ") + e.what());
          }
        }
        std::lock_guard lock(mutex);
        log << "[" << run.id << "] " << (trained ? "done" : "already complete") << "\n";
        ++(trained ? status.trained : status.skipped);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        log << "[" << run.id << "] failed: " << e.what() << "\n";
        status.failed.emplace_back(run.id, e.what());
      }
    }
  };

  if (serial) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), grid.runs.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  std::sort(status.failed.begin(), status.failed.end());
  return status;
}

}  // namespace ecl::cli
