#include "ecl/neuro/analyze.hpp"

#include <cmath>

#include "ecl/core/csv.hpp"
#include "ecl/core/rng.hpp"
#include "ecl/envsim/dataset.hpp"
#include "ecl/harness/train.hpp"
#include "ecl/neuro/gradcam.hpp"

namespace ecl::neuro {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json fit_json(const LinearFit& f) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"r2", num(f.r2)}};
}

void optional_cell(CsvWriter& csv, const std::optional<double>& v) {
  if (v) {
    csv.cell(*v);
  } else {
    csv.empty();
  }
}

void finite_cell(CsvWriter& csv, double v) {
  if (std::isfinite(v)) {
    csv.cell(v);
  } else {
    csv.empty();
  }
}

}  // namespace

Mat<double> TraceSet::final_states(int layer) const {
  const auto& eps = layers.at(static_cast<std::size_t>(layer - 1));
  if (eps.empty()) throw EmptySequenceError("no traces collected");
  Mat<double> out(static_cast<Index>(eps.size()), eps.front().cols());
  for (std::size_t i = 0; i < eps.size(); ++i) out.row(static_cast<Index>(i)) = eps[i].row(eps[i].rows() - 1);
  return out;
}

TraceSet collect_traces(const EmbodiedParams<float>& params, std::span<const SequenceInput<float>> episodes) {
  TraceSet t;
  t.visual_mean.resize(static_cast<Index>(episodes.size()), params.widths.visual);
  Index row = 0;
  for (const auto& in : episodes) {
    const auto out = embodied_forward(in, params);
    t.ids.push_back(in.id);
    t.labels.push_back(in.label);
    t.layers[0].push_back(out.trace.layer1.cast<double>());
    t.layers[1].push_back(out.trace.layer2.cast<double>());
    t.visual_mean.row(row++) = out.trace.visual.cast<double>().colwise().mean();
  }
  return t;
}

std::map<int, Mat<double>> condition_mean_trajectories(const TraceSet& traces, int layer) {
  const auto& eps = traces.layers.at(static_cast<std::size_t>(layer - 1));
  std::map<int, Mat<double>> sums;
  std::map<int, int> counts;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const int n = traces.labels[i];
    auto [it, fresh] = sums.try_emplace(n, Mat<double>::Zero(eps[i].rows(), eps[i].cols()));
    if (it->second.rows() != eps[i].rows()) throw DimensionError("trace length differs from its count label");
    it->second += eps[i];
    ++counts[n];
  }
  for (int n = 1; n <= kNumClasses; ++n)
    if (!sums.contains(n)) throw IncompleteCoverageError("no trajectory for numerosity " + std::to_string(n));
  for (auto& [n, m] : sums) m /= counts[n];
  return sums;
}

JpcaReport jpca_analysis(const std::map<int, Mat<double>>& trajectories, int k) {
  Index rows = 0;
  for (const auto& [n, m] : trajectories) rows += m.rows();
  const Index dims = trajectories.begin()->second.cols();
  Mat<double> stacked(rows, dims);
  Index r = 0;
  for (const auto& [n, m] : trajectories) {
    stacked.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  const auto p = pca(stacked, k);

  std::map<int, Mat<double>> reduced;
  std::vector<Mat<double>> multi_step;
  for (const auto& [n, m] : trajectories) {
    reduced[n] = (m.rowwise() - p.mean.transpose()) * p.components;
    if (m.rows() >= 2) multi_step.push_back(reduced[n]);
  }
  JpcaReport rep;
  const auto fit = fit_linear_dynamics(multi_step);
  rep.r2 = fit.r2;
  const auto plane = jpca_plane(fit.M);
  rep.omega = plane.omega;
  rep.has_rotation = plane.has_rotation;
  rep.rotation_fraction = plane.rotation_fraction;
  rep.rotation_fraction_plane = plane.rotation_fraction_plane;
  try {
    rep.quality = rotation_quality(project(multi_step, plane.basis));
  } catch (const UndefinedStatisticError&) {
  }
  std::map<int, Mat<double>> in_plane;
  for (const auto& [n, m] : reduced) in_plane[n] = m * plane.basis;
  try {
    const auto phase = terminal_phase_regression(in_plane);
    rep.phases_deg = phase.phases_deg;
    rep.pearson_r = phase.pearson_r;
    rep.slope_deg = phase.slope_deg;
  } catch (const UndefinedStatisticError&) {
  }
  return rep;
}

LayerReport analyze_layer(const TraceSet& traces, int layer, const AnalysisOptions& options) {
  LayerReport rep;
  rep.layer = layer;
  const Mat<double> finals = traces.final_states(layer);
  rep.tuning = tuning_and_selectivity(finals, traces.labels);
  rep.detectors = classify_detectors(rep.tuning.curves, options.permutations,
                                     derive_seed(options.seed, 10, static_cast<std::uint64_t>(layer)));
  rep.rdm = compute_rdm(class_means(finals, traces.labels));
  rep.rsa = rsa_spearman(rep.rdm, options.permutations, derive_seed(options.seed, 20, static_cast<std::uint64_t>(layer)));
  rep.distance = distance_structure(rep.rdm);
  rep.jpca = jpca_analysis(condition_mean_trajectories(traces, layer), options.pca_dims);
  return rep;
}

json analyze_run(const std::filesystem::path& run_dir, const AnalysisOptions& options) {
  if (options.rsa_layer != 1 && options.rsa_layer != 2) throw ConfigError("layer must be 1 or 2");
  const auto run = harness::load_run(run_dir, options.checkpoint);
  if (run.config.model != harness::ModelKind::Embodied)
    throw ConfigError("analysis needs an embodied run; " + run.config.id + " is " + harness::to_string(run.config.model));
  const auto& params = std::get<EmbodiedParams<float>>(run.params);

  const auto manifest = envsim::manifest_from_json(read_text_file(run.config.dataset / "manifest.json"));
  const auto val_ids = manifest.validation_ids();
  const auto ds = envsim::load_dataset(run.config.dataset, val_ids);
  std::vector<SequenceInput<float>> inputs;
  for (const auto& id : val_ids) inputs.push_back(make_sequence_input<float>(ds.episode(id), run.config.motor_target));
  const auto traces = collect_traces(params, inputs);

  const auto out_dir = run_dir / "analysis";
  std::filesystem::create_directories(out_dir);
  std::array<LayerReport, 2> layers{analyze_layer(traces, 1, options), analyze_layer(traces, 2, options)};

  {
    std::vector<std::string> header{"layer", "numerosity"};
    for (int j = 1; j <= kNumClasses; ++j) header.push_back("d" + std::to_string(j));
    CsvWriter csv(header);
    const auto& rdm = layers[static_cast<std::size_t>(options.rsa_layer - 1)].rdm;
    for (Index i = 0; i < rdm.rows(); ++i) {
      csv.cell(options.rsa_layer).cell(static_cast<int>(i) + 1);
      for (Index j = 0; j < rdm.cols(); ++j) csv.cell(rdm(i, j));
      csv.end_row();
    }
    csv.write(out_dir / "rdm.csv");
  }
  {
    CsvWriter csv({"layer", "rho", "p"});
    for (const auto& l : layers) csv.cell(l.layer).cell(l.rsa.statistic).cell(l.rsa.p_value).end_row();
    csv.write(out_dir / "rsa.csv");
  }
  {
    std::vector<std::string> header{"unit", "layer"};
    for (int n = 1; n <= kNumClasses; ++n) header.push_back("m" + std::to_string(n));
    for (const char* h : {"S", "selective", "class", "preferred", "rho", "p"}) header.push_back(h);
    CsvWriter csv(header);
    for (const auto& l : layers) {
      for (Index u = 0; u < l.tuning.curves.rows(); ++u) {
        const auto ui = static_cast<std::size_t>(u);
        csv.cell(static_cast<int>(u)).cell(l.layer);
        for (int n = 0; n < kNumClasses; ++n) csv.cell(l.tuning.curves(u, n));
        finite_cell(csv, l.tuning.selectivity(u));
        csv.cell(l.tuning.selective[ui] ? 1 : 0)
            .cell(to_string(l.detectors.classes[ui]))
            .cell(l.tuning.preferred[ui])
            .cell(l.detectors.rho[ui])
            .cell(l.detectors.p_value[ui])
            .end_row();
      }
    }
    csv.write(out_dir / "tuning.csv");
  }
  {
    std::vector<std::string> header{"layer", "R2", "omega", "quality", "rotation_fraction"};
    for (int n = 1; n <= kNumClasses; ++n) header.push_back("phase_" + std::to_string(n));
    for (const char* h : {"pearson_r", "slope_deg", "rotation_fraction_plane"}) header.push_back(h);
    CsvWriter csv(header);
    for (const auto& l : layers) {
      const auto& j = l.jpca;
      csv.cell(l.layer);
      optional_cell(csv, j.r2);
      csv.cell(j.omega);
      optional_cell(csv, j.quality);
      csv.cell(j.rotation_fraction);
      for (std::size_t n = 0; n < static_cast<std::size_t>(kNumClasses); ++n) {
        if (n < j.phases_deg.size()) {
          csv.cell(j.phases_deg[n]);
        } else {
          csv.empty();
        }
      }
      optional_cell(csv, j.pearson_r);
      optional_cell(csv, j.slope_deg);
      csv.cell(j.rotation_fraction_plane).end_row();
    }
    csv.write(out_dir / "jpca.csv");
  }
  {
    CsvWriter csv({"layer", "adjacent_linear_slope", "adjacent_linear_r2", "adjacent_log_slope", "adjacent_log_r2",
                   "ratio_linear_r2", "weber_c", "weber_r2"});
    for (const auto& l : layers) {
      const auto& d = l.distance;
      csv.cell(l.layer);
      for (double v : {d.adjacent_linear.slope, d.adjacent_linear.r2, d.adjacent_log.slope, d.adjacent_log.r2,
                       d.ratio_linear.r2, d.weber.slope, d.weber.r2})
        finite_cell(csv, v);
      csv.end_row();
    }
    csv.write(out_dir / "distance.csv");
  }
  {
    const auto p = pca(traces.visual_mean, 2);
    CsvWriter csv({"numerosity", "pc1", "pc2"});
    for (Index i = 0; i < p.projections.rows(); ++i) {
      csv.cell(traces.labels[static_cast<std::size_t>(i)]).cell(p.projections(i, 0));
      if (p.projections.cols() > 1) {
        csv.cell(p.projections(i, 1));
      } else {
        csv.empty();
      }
      csv.end_row();
    }
    csv.write(out_dir / "pca_coords.csv");
  }
  {
    std::map<int, int> written;
    for (const auto& in : inputs) {
      if (written[in.label] >= options.gradcam_per_numerosity) continue;
      ++written[in.label];
      const auto map = embodied_grad_cam(params, in, in.steps() - 1, options.gradcam_block, in.label);
      write_pgm(out_dir / "gradcam" / (in.id + "_conv" + std::to_string(options.gradcam_block) + ".pgm"), map);
    }
  }

  json summary = {{"run", run.config.id}, {"checkpoint", options.checkpoint}, {"epoch", run.epoch}, {"layers", json::array()}};
  for (const auto& l : layers) {
    const auto& j = l.jpca;
    summary["layers"].push_back(
        {{"layer", l.layer},
         {"rsa_rho", l.rsa.statistic},
         {"rsa_p", l.rsa.p_value},
         {"positive_detectors", l.detectors.positive},
         {"negative_detectors", l.detectors.negative},
         {"positive_log_fit", fit_json(l.detectors.positive_log_fit)},
         {"negative_log_fit", fit_json(l.detectors.negative_log_fit)},
         {"adjacent_log_fit", fit_json(l.distance.adjacent_log)},
         {"weber_fit", fit_json(l.distance.weber)},
         {"jpca",
          {{"r2", optional_json(j.r2)},
           {"omega", j.omega},
           {"quality", optional_json(j.quality)},
           {"rotation_fraction", j.rotation_fraction},
           {"rotation_fraction_plane", j.rotation_fraction_plane},
           {"pearson_r", optional_json(j.pearson_r)},
           {"slope_deg", optional_json(j.slope_deg)}}}});
  }
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace ecl::neuro
