#include "ecl/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ecl/core/csv.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/harness/train.hpp"
#include "ecl/neuro/stats.hpp"

namespace ecl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kAcquisitionPermutations = 10000;

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

double require_cell(const std::string& s, const fs::path& file) {
  const auto v = parse_cell(s);
  if (!v) throw Error("missing value in " + file.string());
  return *v;
}

std::string cell(const CsvTable& t, const std::vector<std::string>& row, std::string_view name) {
  const auto c = t.column(name);
  if (c >= row.size()) throw Error("short csv row");
  return row[c];
}

void optional_cell(CsvWriter& csv, const std::optional<double>& v) {
  if (v) {
    csv.cell(*v);
  } else {
    csv.empty();
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void read_analysis(const fs::path& dir, RunSummary& s) {
  const auto rsa_path = dir / "rsa.csv", jpca_path = dir / "jpca.csv";
  if (!fs::exists(rsa_path) || !fs::exists(jpca_path)) return;
  std::map<int, LayerSummary> layers;
  const auto rsa = read_csv(rsa_path);
  for (const auto& row : rsa.rows) {
    auto& l = layers[static_cast<int>(require_cell(cell(rsa, row, "layer"), rsa_path))];
    l.rsa_rho = parse_cell(cell(rsa, row, "rho"));
    l.rsa_p = parse_cell(cell(rsa, row, "p"));
  }
  const auto jpca = read_csv(jpca_path);
  for (const auto& row : jpca.rows) {
    auto& l = layers[static_cast<int>(require_cell(cell(jpca, row, "layer"), jpca_path))];
    l.jpca_r = parse_cell(cell(jpca, row, "pearson_r"));
    l.jpca_slope_deg = parse_cell(cell(jpca, row, "slope_deg"));
    l.jpca_quality = parse_cell(cell(jpca, row, "quality"));
  }
  for (auto& [layer, l] : layers) {
    l.layer = layer;
    s.layers.push_back(l);
  }
}

}  // namespace

std::array<int, kNumClasses> epoch_to_threshold(const std::vector<std::array<double, kNumClasses>>& per_epoch,
                                                double threshold) {
  std::array<int, kNumClasses> out;
  out.fill(static_cast<int>(per_epoch.size()) + 1);
  for (std::size_t e = per_epoch.size(); e-- > 0;)
    for (std::size_t n = 0; n < out.size(); ++n)
      if (per_epoch[e][n] >= threshold) out[n] = static_cast<int>(e) + 1;
  return out;
}

RunSummary summarize_run(const fs::path& run_dir, double threshold) {
  RunSummary s;
  s.config = harness::run_config_from_json(
      harness::parse_json_text(read_text_file(run_dir / "config.json"), (run_dir / "config.json").string()));
  s.id = run_dir.filename().string();

  const auto curve_path = run_dir / "learning_curve.csv";
  const auto curve = read_csv(curve_path);
  if (curve.rows.empty()) throw Error("no epochs in " + curve_path.string());
  s.epochs = static_cast<int>(curve.rows.size());
  for (const auto& row : curve.rows) {
    const int epoch = static_cast<int>(require_cell(cell(curve, row, "epoch"), curve_path));
    const double acc = require_cell(cell(curve, row, "val_count_acc"), curve_path);
    if (s.best_epoch == 0 || acc > s.best_acc) {
      s.best_epoch = epoch;
      s.best_acc = acc;
      s.best_motor_mse = parse_cell(cell(curve, row, "val_motor_mse"));
    }
  }

  const auto per_path = run_dir / "per_number.csv";
  const auto per = read_csv(per_path);
  std::vector<std::array<double, kNumClasses>> per_epoch(static_cast<std::size_t>(s.epochs));
  for (auto& a : per_epoch) a.fill(std::nan(""));
  for (const auto& row : per.rows) {
    const int epoch = static_cast<int>(require_cell(cell(per, row, "epoch"), per_path));
    const int n = static_cast<int>(require_cell(cell(per, row, "numerosity"), per_path));
    if (epoch < 1 || epoch > s.epochs || n < 1 || n > kNumClasses)
      throw Error("out-of-range row in " + per_path.string());
    per_epoch[static_cast<std::size_t>(epoch - 1)][static_cast<std::size_t>(n - 1)] =
        parse_cell(cell(per, row, "accuracy")).value_or(std::nan(""));
  }
  s.epoch_to_threshold = epoch_to_threshold(per_epoch, threshold);

  std::vector<double> numbers(kNumClasses), epochs(kNumClasses);
  std::iota(numbers.begin(), numbers.end(), 1.0);
  std::copy(s.epoch_to_threshold.begin(), s.epoch_to_threshold.end(), epochs.begin());
  try {
    const auto test = neuro::spearman_permutation_test(numbers, epochs, kAcquisitionPermutations, 0);
    s.acquisition_rho = test.statistic;
    s.acquisition_p = test.p_value;
  } catch (const UndefinedStatisticError&) {
  }

  read_analysis(run_dir / "analysis", s);
  return s;
}

SummaryReport build_report(const fs::path& root, double threshold) {
  SummaryReport r;
  r.threshold = threshold;
  if (fs::is_directory(root)) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory() && harness::run_complete(entry.path())) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) r.runs.push_back(summarize_run(d, threshold));
  }
  if (r.runs.empty()) throw EmptyReportError("no completed runs under " + root.string());

  std::map<double, double> best_acc, best_mse;
  for (const auto& s : r.runs) {
    const double f = s.config.fraction;
    best_acc[f] = best_acc.contains(f) ? std::max(best_acc[f], s.best_acc) : s.best_acc;
    if (s.best_motor_mse)
      best_mse[f] = best_mse.contains(f) ? std::min(best_mse[f], *s.best_motor_mse) : *s.best_motor_mse;
  }
  for (auto& s : r.runs) {
    s.best_acc_in_fraction = s.best_acc == best_acc[s.config.fraction];
    s.best_mse_in_fraction = s.best_motor_mse && *s.best_motor_mse == best_mse[s.config.fraction];
  }
  return r;
}

std::string report_csv(const SummaryReport& r) {
  std::vector<std::string> header{"run",      "model",      "fraction",       "curriculum",
                                  "shuffle_joints", "lambda", "seed",         "epochs",
                                  "best_epoch", "best_acc",   "best_motor_mse", "best_acc_in_fraction",
                                  "best_mse_in_fraction"};
  for (int l = 1; l <= 2; ++l)
    for (const char* h : {"rsa_rho_l", "rsa_p_l", "jpca_r_l", "jpca_slope_l", "jpca_quality_l"})
      header.push_back(h + std::to_string(l));
  for (int n = 1; n <= kNumClasses; ++n) header.push_back("e2t_" + std::to_string(n));
  header.push_back("acquisition_rho");
  header.push_back("acquisition_p");

  CsvWriter csv(header);
  for (const auto& s : r.runs) {
    const auto& c = s.config;
    csv.cell(s.id)
        .cell(harness::to_string(c.model))
        .cell(c.fraction)
        .cell(harness::to_string(c.curriculum))
        .cell(c.shuffle_joints ? 1 : 0)
        .cell(c.lambda)
        .cell(static_cast<long long>(c.seed))
        .cell(s.epochs)
        .cell(s.best_epoch)
        .cell(s.best_acc);
    optional_cell(csv, s.best_motor_mse);
    csv.cell(s.best_acc_in_fraction ? 1 : 0).cell(s.best_mse_in_fraction ? 1 : 0);
    for (int l = 1; l <= 2; ++l) {
      const auto it = std::find_if(s.layers.begin(), s.layers.end(), [&](const LayerSummary& x) { return x.layer == l; });
      const LayerSummary empty;
      const auto& ls = it == s.layers.end() ? empty : *it;
      for (const auto& v : {ls.rsa_rho, ls.rsa_p, ls.jpca_r, ls.jpca_slope_deg, ls.jpca_quality}) optional_cell(csv, v);
    }
    for (int e : s.epoch_to_threshold) csv.cell(e);
    optional_cell(csv, s.acquisition_rho);
    optional_cell(csv, s.acquisition_p);
    csv.end_row();
  }
  return csv.str();
}

json report_json(const SummaryReport& r) {
  json runs = json::array();
  for (const auto& s : r.runs) {
    json layers = json::array();
    for (const auto& l : s.layers)
      layers.push_back({{"layer", l.layer},
                        {"rsa_rho", optional_json(l.rsa_rho)},
                        {"rsa_p", optional_json(l.rsa_p)},
                        {"jpca_r", optional_json(l.jpca_r)},
                        {"jpca_slope_deg", optional_json(l.jpca_slope_deg)},
                        {"jpca_quality", optional_json(l.jpca_quality)}});
    runs.push_back({{"run", s.id},
                    {"config", harness::to_json(s.config)},
                    {"epochs", s.epochs},
                    {"best_epoch", s.best_epoch},
                    {"best_acc", s.best_acc},
                    {"best_motor_mse", optional_json(s.best_motor_mse)},
                    {"best_acc_in_fraction", s.best_acc_in_fraction},
                    {"best_mse_in_fraction", s.best_mse_in_fraction},
                    {"layers", layers},
                    {"epoch_to_threshold", s.epoch_to_threshold},
                    {"acquisition_rho", optional_json(s.acquisition_rho)},
                    {"acquisition_p", optional_json(s.acquisition_p)}});
  }
  return {{"threshold", r.threshold}, {"runs", runs}};
}

void write_report(const SummaryReport& r, const fs::path& root) {
  write_text_file(root / "summary.csv", report_csv(r));
  write_text_file(root / "summary.json", report_json(r).dump(2) + "\n");
}

}  // namespace ecl::cli
