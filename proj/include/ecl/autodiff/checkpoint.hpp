#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecl/autodiff/params.hpp"
#include "json.hpp"

namespace ecl {

struct CheckpointEntry {
  std::string name;
  std::vector<Index> shape;
  std::vector<float> values;  // C order of `shape`
};

/// On disk: u64 little-endian header length, UTF-8 JSON header
/// {"format", "step", "meta", "params": [{"name", "shape"}...]}, then each
/// parameter as little-endian float32, concatenated in header order.
struct Checkpoint {
  std::int64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<CheckpointEntry> entries;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename Params>
Checkpoint make_checkpoint(const Params& params, std::int64_t step, nlohmann::json meta = nlohmann::json::object()) {
  Checkpoint c;
  c.step = step;
  c.meta = std::move(meta);
  for (const auto& p : param_list(params)) {
    CheckpointEntry e{p.name, p.shape, std::vector<float>(static_cast<std::size_t>(p.size))};
    for (Index i = 0; i < p.size; ++i) e.values[static_cast<std::size_t>(i)] = static_cast<float>(p.data[i]);
    c.entries.push_back(std::move(e));
  }
  return c;
}

/// Copies checkpoint values into `params`; names and shapes must match exactly.
template <typename Params>
void restore_checkpoint(const Checkpoint& c, Params& params) {
  using Scalar = typename Params::Scalar;
  auto ps = param_list(params);
  if (ps.size() != c.entries.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(c.entries.size()) + " tensors, model has " +
                          std::to_string(ps.size()));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& e = c.entries[i];
    if (e.name != ps[i].name || e.shape != ps[i].shape) {
      throw CheckpointError("checkpoint tensor " + e.name + " does not match model tensor " + ps[i].name);
    }
    for (Index k = 0; k < ps[i].size; ++k) ps[i].data[k] = static_cast<Scalar>(e.values[static_cast<std::size_t>(k)]);
  }
}

}  // namespace ecl
