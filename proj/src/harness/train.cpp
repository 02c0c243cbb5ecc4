#include "ecl/harness/train.hpp"

#include <cmath>
#include <ostream>

#include "ecl/autodiff/checkpoint.hpp"
#include "ecl/core/csv.hpp"
#include "ecl/envsim/dataset.hpp"
#include "ecl/harness/batching.hpp"

namespace ecl::harness {

namespace {

enum Stream : std::uint64_t { kInit = 1, kOrder = 2, kDropout = 3, kShuffle = 4 };

std::vector<SequenceInput<float>> to_inputs(const envsim::Dataset& ds, const std::vector<std::string>& ids,
                                            MotorTarget target) {
  std::vector<SequenceInput<float>> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(make_sequence_input<float>(ds.episode(id), target));
  return out;
}

VisionMode vision_mode(ModelKind k) { return k == ModelKind::VisionSingle ? VisionMode::Single : VisionMode::Pool; }

nlohmann::json checkpoint_meta(const RunConfig& c, int epoch) {
  return {{"run", c.id}, {"model", to_string(c.model)}, {"epoch", epoch}, {"widths", widths_to_json(c.widths)}};
}

template <typename Params>
TrainRecord run_training(const RunConfig& cfg, const TrainData& data, const std::filesystem::path& dir,
                         std::ostream* log, Params params) {
  Rng init_rng(derive_seed(cfg.seed, kInit));
  Rng order_rng(derive_seed(cfg.seed, kOrder));
  Rng dropout_rng(derive_seed(cfg.seed, kDropout));
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffle));
  constexpr bool embodied = std::is_same_v<Params, EmbodiedParams<float>>;
  if constexpr (embodied) {
    init_embodied(params, init_rng);
  } else {
    init_vision(params, init_rng);
  }
  auto adam = make_adam_state(params, cfg.optimizer);
  auto grads = zeros_like(params);

  std::vector<int> labels;
  for (const auto& s : data.train) labels.push_back(s.label);

  TrainRecord record;
  double best_acc = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = order_curriculum(labels, cfg.curriculum, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<SequenceInput<float>> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data.train[order[i]]);
      if (cfg.shuffle_joints) shuffle_joints(batch, shuffle_rng, cfg.shuffle_mode);

      set_zero(grads);
      for (const auto& sample : batch) {
        double loss = 0.0;
        if constexpr (embodied) {
          EmbodiedOptions opt;
          opt.train = true;
          opt.rng = &dropout_rng;
          loss = embodied_loss_and_grad(sample, params, cfg.lambda, opt, grads).total;
        } else {
          loss = vision_loss_and_grad(sample, params, vision_mode(cfg.model), grads);
        }
        if (!std::isfinite(loss)) {
          throw DivergenceError("run " + cfg.id + " diverged at epoch " + std::to_string(epoch) + ", episode " +
                                sample.id + " (loss " + std::to_string(loss) + ")");
        }
        loss_sum += loss;
      }
      scale(grads, 1.0f / static_cast<float>(batch.size()));
      if (!all_finite(grads)) {
        throw DivergenceError("run " + cfg.id + " produced non-finite gradients at epoch " + std::to_string(epoch));
      }
      adam_update(params, grads, adam);
    }

    EvalResult ev;
    if constexpr (embodied) {
      ev = evaluate(params, data.val, cfg.motor_loss_active());
    } else {
      ev = evaluate(params, data.val, vision_mode(cfg.model));
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.val_count_acc = ev.accuracy;
    m.val_motor_mse = ev.motor_mse;
    m.train_loss = loss_sum / static_cast<double>(order.size());
    m.per_number = ev.per_number;
    record.epochs.push_back(m);
    if (ev.accuracy > best_acc) {
      best_acc = ev.accuracy;
      record.best_epoch = epoch;
      write_checkpoint(dir / "checkpoint_best.bin", make_checkpoint(params, epoch, checkpoint_meta(cfg, epoch)));
    }
    if (log) {
      *log << cfg.id << " epoch " << epoch << "/" << cfg.epochs << " loss " << m.train_loss << " val_acc "
           << m.val_count_acc;
      if (m.val_motor_mse) *log << " val_mse " << *m.val_motor_mse;
      *log << '\n';
    }
  }

  write_text_file(dir / "learning_curve.csv", learning_curve_csv(record, cfg.motor_loss_active()));
  write_text_file(dir / "per_number.csv", per_number_csv(record));
  write_checkpoint(dir / "checkpoint_final.bin",
                   make_checkpoint(params, cfg.epochs, checkpoint_meta(cfg, cfg.epochs)));
  return record;
}

}  // namespace

TrainData load_train_data(const RunConfig& config) {
  const auto manifest = envsim::manifest_from_json(read_text_file(config.dataset / "manifest.json"));
  const auto& train_ids = manifest.subset(config.fraction);
  const auto val_ids = manifest.validation_ids();
  std::vector<std::string> ids(train_ids.begin(), train_ids.end());
  ids.insert(ids.end(), val_ids.begin(), val_ids.end());
  const auto ds = envsim::load_dataset(config.dataset, ids);
  return {to_inputs(ds, train_ids, config.motor_target), to_inputs(ds, val_ids, config.motor_target)};
}

TrainRecord train(const RunConfig& config, const TrainData& data, const std::filesystem::path& run_dir,
                  std::ostream* log) {
  config.validate();
  if (data.train.empty() || data.val.empty()) throw EmptySequenceError("train: empty train or validation split");
  std::filesystem::create_directories(run_dir);
  std::filesystem::remove(run_dir / "checkpoint_final.bin");
  write_text_file(run_dir / "config.json", to_json(config).dump(2) + "\n");
  if (config.model == ModelKind::Embodied) return run_training(config, data, run_dir, log, EmbodiedParams<float>(config.widths));
  return run_training(config, data, run_dir, log, VisionParams<float>(config.widths));
}

TrainRecord train(const RunConfig& config, std::ostream* log) {
  return train(config, load_train_data(config), config.run_dir(), log);
}

bool run_complete(const std::filesystem::path& run_dir) {
  return std::filesystem::exists(run_dir / "checkpoint_final.bin");
}

LoadedRun load_run(const std::filesystem::path& run_dir, const std::string& which) {
  if (which != "final" && which != "best") throw ConfigError("checkpoint must be 'final' or 'best'");
  const auto file = run_dir / "config.json";
  LoadedRun run{run_config_from_json(parse_json_text(read_text_file(file), file.string())), EmbodiedParams<float>{}, 0};
  const auto ckpt = read_checkpoint(run_dir / ("checkpoint_" + which + ".bin"));
  run.epoch = ckpt.step;
  if (run.config.model == ModelKind::Embodied) {
    EmbodiedParams<float> p(run.config.widths);
    restore_checkpoint(ckpt, p);
    run.params = std::move(p);
  } else {
    VisionParams<float> p(run.config.widths);
    restore_checkpoint(ckpt, p);
    run.params = std::move(p);
  }
  return run;
}

std::string learning_curve_csv(const TrainRecord& record, bool motor_column_active) {
  CsvWriter csv({"epoch", "val_count_acc", "val_motor_mse", "train_loss"});
  for (const auto& e : record.epochs) {
    csv.cell(e.epoch).cell(e.val_count_acc);
    if (motor_column_active && e.val_motor_mse) {
      csv.cell(*e.val_motor_mse);
    } else {
      csv.empty();
    }
    csv.cell(e.train_loss).end_row();
  }
  return csv.str();
}

std::string per_number_csv(const TrainRecord& record) {
  CsvWriter csv({"epoch", "numerosity", "accuracy"});
  for (const auto& e : record.epochs) {
    for (int k = 0; k < kNumClasses; ++k) {
      csv.cell(e.epoch).cell(k + 1);
      const double a = e.per_number[static_cast<std::size_t>(k)];
      if (std::isnan(a)) {
        csv.empty();
      } else {
        csv.cell(a);
      }
      csv.end_row();
    }
  }
  return csv.str();
}

}  // namespace ecl::harness
