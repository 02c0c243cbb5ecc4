// Command-line driver: dataset generation, training, analysis, experiment
// grids and summary reports.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "ecl/cli/grid.hpp"
#include "ecl/cli/report.hpp"
#include "ecl/envsim/dataset.hpp"
#include "ecl/harness/train.hpp"
#include "ecl/neuro/analyze.hpp"

namespace fs = std::filesystem;
using namespace ecl;

int main(int argc, char** argv) {
  CLI::App app{"Embodied counting: synthetic data, training and analysis"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic counting dataset");
  std::uint64_t gen_seed = 0;
  fs::path gen_out = "data";
  int image_size = 64;
  int total = 1188;
  gen->add_option("--seed", gen_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--image-size", image_size, "Square frame side in pixels")->capture_default_str();
  gen->add_option("--total", total, "Number of episodes")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train one run from a JSON config");
  fs::path train_config;
  train->add_option("--config", train_config, "Run config JSON")->required()->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "Analyze a trained embodied run");
  neuro::AnalysisOptions analysis;
  fs::path analyze_run;
  analyze->add_option("--run", analyze_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--layer", analysis.rsa_layer, "LSTM layer for the RDM exports (1 or 2)")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  analyze->add_option("--checkpoint", analysis.checkpoint, "final or best")
      ->check(CLI::IsMember({"final", "best"}))
      ->capture_default_str();
  analyze->add_option("--permutations", analysis.permutations, "Permutations for p-values")->capture_default_str();
  analyze->add_option("--seed", analysis.seed, "Seed for permutation tests")->capture_default_str();

  auto* grid = app.add_subcommand("grid", "Run every configuration of an experiment grid");
  fs::path grid_config;
  int jobs = 1;
  grid->add_option("--config", grid_config, "Grid config JSON")->required()->check(CLI::ExistingFile);
  grid->add_option("--jobs", jobs, "Runs trained in parallel")->check(CLI::PositiveNumber)->capture_default_str();

  auto* report = app.add_subcommand("report", "Summarize completed runs");
  fs::path report_root = "runs";
  double threshold = 0.8;
  report->add_option("--root", report_root, "Output root holding run directories")->capture_default_str();
  report->add_option("--threshold", threshold, "Per-number accuracy that counts as learned")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto config = envsim::DatasetConfig::scaled(total, image_size);
      const auto ds = envsim::generate_dataset(gen_seed, config);
      envsim::write_dataset(ds, gen_out);
      std::cout << "wrote " << ds.episodes.size() << " episodes to " << gen_out.string() << "\n";
    } else if (*train) {
      const auto config = harness::load_run_config(train_config);
      const auto record = harness::train(config, &std::cerr);
      const auto& best = record.epochs[static_cast<std::size_t>(record.best_epoch - 1)];
      std::cout << config.run_dir().string() << ": best val accuracy " << best.val_count_acc << " at epoch "
                << record.best_epoch << "\n";
    } else if (*analyze) {
      const auto summary = neuro::analyze_run(analyze_run, analysis);
      std::cout << summary.dump(2) << "\n";
    } else if (*grid) {
      const auto g = cli::load_grid(grid_config);
      const auto status = cli::run_grid(g, jobs, std::cerr);
      std::cout << status.trained << " trained, " << status.skipped << " skipped, " << status.failed.size()
                << " failed\n";
      for (const auto& [id, message] : status.failed) std::cerr << id << ": " << message << "\n";
      return status.failed.empty() ? 0 : 1;
    } else if (*report) {
      const auto root = harness::output_root_override(report_root);
      const auto r = cli::build_report(root, threshold);
      cli::write_report(r, root);
      std::cout << "summarized " << r.runs.size() << " runs into " << root.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
