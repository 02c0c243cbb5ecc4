#include "ecl/harness/config.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "ecl/core/csv.hpp"

namespace ecl::harness {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<const char*, E> (&table)[N], const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  std::string options;
  for (const auto& [name, value] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + options + ")");
}

template <typename E, std::size_t N>
std::string enum_name(E v, const std::pair<const char*, E> (&table)[N]) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  return "?";
}

const std::pair<const char*, ModelKind> kModels[] = {
    {"embodied", ModelKind::Embodied}, {"vision-single", ModelKind::VisionSingle}, {"vision-pool", ModelKind::VisionPool}};
const std::pair<const char*, Curriculum> kCurricula[] = {
    {"random", Curriculum::Random}, {"easy-to-hard", Curriculum::EasyToHard}, {"hard-to-easy", Curriculum::HardToEasy}};
const std::pair<const char*, ShuffleMode> kShuffleModes[] = {{"both", ShuffleMode::Both},
                                                             {"targets", ShuffleMode::Targets}};
const std::pair<const char*, MotorTarget> kMotorTargets[] = {{"next", MotorTarget::Next},
                                                             {"current", MotorTarget::Current}};

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(ModelKind k) { return enum_name(k, kModels); }
std::string to_string(Curriculum c) { return enum_name(c, kCurricula); }
std::string to_string(ShuffleMode m) { return enum_name(m, kShuffleModes); }
ModelKind parse_model_kind(const std::string& s) { return parse_enum(s, kModels, "model"); }
Curriculum parse_curriculum(const std::string& s) { return parse_enum(s, kCurricula, "curriculum"); }
ShuffleMode parse_shuffle_mode(const std::string& s) { return parse_enum(s, kShuffleModes, "shuffle mode"); }

void RunConfig::validate() const {
  if (id.empty() || id.find('/') != std::string::npos || id == "." || id == "..")
    throw ConfigError("run id '" + id + "' is not a valid directory name");
  if (shuffle_joints && model != ModelKind::Embodied)
    throw ConfigError("run " + id + ": shuffle_joints requires the embodied model");
  if (fraction != 0.1 && fraction != 0.5 && fraction != 1.0)
    throw ConfigError("run " + id + ": fraction must be 0.1, 0.5 or 1.0");
  if (epochs < 1) throw ConfigError("run " + id + ": epochs must be positive");
  if (batch_size < 1) throw ConfigError("run " + id + ": batch_size must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("run " + id + ": lambda must be >= 0");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("run " + id + ": learning_rate must be positive");
  widths.validate();
}

json widths_to_json(const ModelWidths& w) {
  return {{"conv_channels", w.conv_channels},
          {"visual", w.visual},
          {"motor_hidden", w.motor_hidden},
          {"motor", w.motor},
          {"hidden", w.hidden},
          {"classifier_hidden", w.classifier_hidden},
          {"dropout", w.dropout}};
}

ModelWidths widths_from_json(const json& j, ModelWidths w) {
  reject_unknown(j, {"conv_channels", "visual", "motor_hidden", "motor", "hidden", "classifier_hidden", "dropout"},
                 "widths");
  read(j, "conv_channels", w.conv_channels);
  read(j, "visual", w.visual);
  read(j, "motor_hidden", w.motor_hidden);
  read(j, "motor", w.motor);
  read(j, "hidden", w.hidden);
  read(j, "classifier_hidden", w.classifier_hidden);
  read(j, "dropout", w.dropout);
  return w;
}

json to_json(const RunConfig& c) {
  return {{"id", c.id},
          {"model", to_string(c.model)},
          {"dataset", c.dataset.string()},
          {"output_root", c.output_root.string()},
          {"fraction", c.fraction},
          {"curriculum", to_string(c.curriculum)},
          {"shuffle_joints", c.shuffle_joints},
          {"shuffle_mode", to_string(c.shuffle_mode)},
          {"lambda", c.lambda},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"widths", widths_to_json(c.widths)},
          {"optimizer",
           {{"learning_rate", c.optimizer.learning_rate},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"epsilon", c.optimizer.epsilon},
            {"weight_decay", c.optimizer.weight_decay}}},
          {"motor_target", enum_name(c.motor_target, kMotorTargets)}};
}

RunConfig run_config_from_json(const json& j, const RunConfig& base) {
  reject_unknown(j,
                 {"id", "model", "dataset", "output_root", "fraction", "curriculum", "shuffle_joints", "shuffle_mode",
                  "lambda", "epochs", "batch_size", "seed", "widths", "optimizer", "motor_target"},
                 "run config");
  RunConfig c = base;
  read(j, "id", c.id);
  if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("output_root")) c.output_root = j.at("output_root").get<std::string>();
  read(j, "fraction", c.fraction);
  if (j.contains("curriculum")) c.curriculum = parse_curriculum(j.at("curriculum").get<std::string>());
  read(j, "shuffle_joints", c.shuffle_joints);
  if (j.contains("shuffle_mode")) c.shuffle_mode = parse_shuffle_mode(j.at("shuffle_mode").get<std::string>());
  read(j, "lambda", c.lambda);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  if (j.contains("widths")) c.widths = widths_from_json(j.at("widths"), c.widths);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    reject_unknown(o, {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay"}, "optimizer");
    read(o, "learning_rate", c.optimizer.learning_rate);
    read(o, "beta1", c.optimizer.beta1);
    read(o, "beta2", c.optimizer.beta2);
    read(o, "epsilon", c.optimizer.epsilon);
    read(o, "weight_decay", c.optimizer.weight_decay);
  }
  if (j.contains("motor_target"))
    c.motor_target = parse_enum(j.at("motor_target").get<std::string>(), kMotorTargets, "motor target");
  return c;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column and quote the line.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, line_start = 0;
    for (std::size_t i = 0; i < at; ++i)
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    const std::size_t line_end = text.find('\n', line_start);
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << (at - line_start + 1) << ": malformed JSON\n  "
        << text.substr(line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start)
        << "\n  " << std::string(at - line_start, ' ') << "^";
    throw ConfigError(msg.str());
  }
}

RunConfig load_run_config(const std::filesystem::path& file) {
  auto c = run_config_from_json(parse_json_text(read_text_file(file), file.string()));
  c.output_root = output_root_override(c.output_root);
  c.validate();
  return c;
}

std::filesystem::path output_root_override(const std::filesystem::path& fallback) {
  const char* env = std::getenv("ECL_OUT");
  return env && *env ? std::filesystem::path(env) : fallback;
}

}  // namespace ecl::harness
