#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ecl/autodiff/adam.hpp"
#include "ecl/models/input.hpp"
#include "ecl/models/widths.hpp"
#include "json.hpp"

namespace ecl::harness {

enum class ModelKind { Embodied, VisionSingle, VisionPool };
enum class Curriculum { Random, EasyToHard, HardToEasy };
/// Both: the whole foreign motor stream (inputs and targets). Targets: only
/// the motor targets are permuted.
enum class ShuffleMode { Both, Targets };

std::string to_string(ModelKind k);
std::string to_string(Curriculum c);
std::string to_string(ShuffleMode m);
ModelKind parse_model_kind(const std::string& s);
Curriculum parse_curriculum(const std::string& s);
ShuffleMode parse_shuffle_mode(const std::string& s);

struct RunConfig {
  std::string id = "run";
  ModelKind model = ModelKind::Embodied;
  std::filesystem::path dataset = "data";
  std::filesystem::path output_root = "runs";
  double fraction = 0.1;
  Curriculum curriculum = Curriculum::Random;
  bool shuffle_joints = false;
  ShuffleMode shuffle_mode = ShuffleMode::Both;
  double lambda = 1.0;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  ModelWidths widths;
  AdamConfig optimizer;
  MotorTarget motor_target = MotorTarget::Next;

  std::filesystem::path run_dir() const { return output_root / id; }
  bool motor_loss_active() const { return model == ModelKind::Embodied && lambda != 0.0; }
  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

nlohmann::json widths_to_json(const ModelWidths& w);
ModelWidths widths_from_json(const nlohmann::json& j, ModelWidths base = {});

nlohmann::json to_json(const RunConfig& c);
/// Missing keys take their defaults from `base`; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {});

/// Parses JSON text, reporting syntax errors with line and column context.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);

RunConfig load_run_config(const std::filesystem::path& file);

/// Output root from the ECL_OUT environment variable if set, else `fallback`.
std::filesystem::path output_root_override(const std::filesystem::path& fallback);

}  // namespace ecl::harness
