#include "ecl/autodiff/checkpoint.hpp"

#include <fstream>
#include <numeric>

#include "ecl/core/errors.hpp"

namespace ecl {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "ecl-checkpoint-v1";

std::size_t element_count(const std::vector<Index>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, Index b) { return a * static_cast<std::size_t>(b); });
}
}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  json header;
  header["format"] = kFormat;
  header["step"] = c.step;
  header["meta"] = c.meta;
  header["params"] = json::array();
  for (const auto& e : c.entries) {
    if (element_count(e.shape) != e.values.size()) throw CheckpointError("shape/value mismatch for " + e.name);
    header["params"].push_back({{"name", e.name}, {"shape", e.shape}});
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string());
  std::uint64_t len = text.size();
  unsigned char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(len_bytes), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& e : c.entries) {
    out.write(reinterpret_cast<const char*>(e.values.data()),
              static_cast<std::streamsize>(e.values.size() * sizeof(float)));
  }
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  unsigned char len_bytes[8];
  in.read(reinterpret_cast<char*>(len_bytes), 8);
  if (!in) throw CheckpointError("truncated checkpoint header: " + path.string());
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(len_bytes[i]) << (8 * i);
  if (len > (1u << 26)) throw CheckpointError("implausible checkpoint header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint header: " + path.string());
  Checkpoint c;
  try {
    const json header = json::parse(text);
    if (header.at("format").get<std::string>() != kFormat) throw CheckpointError("unknown checkpoint format");
    c.step = header.at("step").get<std::int64_t>();
    c.meta = header.at("meta");
    for (const auto& p : header.at("params")) {
      CheckpointEntry e;
      e.name = p.at("name").get<std::string>();
      e.shape = p.at("shape").get<std::vector<Index>>();
      e.values.resize(element_count(e.shape));
      c.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + ex.what());
  }
  for (auto& e : c.entries) {
    in.read(reinterpret_cast<char*>(e.values.data()), static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    if (!in) throw CheckpointError("truncated checkpoint payload at " + e.name);
  }
  return c;
}

}  // namespace ecl
