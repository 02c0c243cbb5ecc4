#include "ecl/envsim/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <tuple>

#include "ecl/core/csv.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/core/rng.hpp"
#include "json.hpp"

namespace ecl::envsim {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "frame and checkpoint payloads are written in host order");

namespace {

// Per-numerosity sequence counts of the recorded robot dataset.
constexpr std::array<int, 10> kReferenceProfile{405, 206, 134, 102, 81, 66, 58, 51, 45, 40};

const Eigen::Vector2d kHome{45.0, 30.0};

std::string episode_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep_%04zu", index);
  return buf;
}

std::string fraction_key(double fraction) {
  if (std::abs(fraction - 0.1) < 1e-9) return "0.1";
  if (std::abs(fraction - 0.5) < 1e-9) return "0.5";
  if (std::abs(fraction - 1.0) < 1e-9) return "1.0";
  throw ConfigError("data fraction must be 0.1, 0.5 or 1.0");
}

}  // namespace

std::vector<int> apportion(int total, std::span<const double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out(weights.size(), 0);
  if (total <= 0 || weights.empty()) return out;
  if (sum <= 0.0) throw InfeasibleDistributionError("apportion weights sum to zero");
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * weights[i] / sum;
    out[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % order.size()]];
  return out;
}

std::vector<int> zipf_counts(int total, int n_max) {
  if (n_max < 1) throw InfeasibleDistributionError("n_max must be >= 1");
  if (total < n_max) {
    throw InfeasibleDistributionError("cannot give each of " + std::to_string(n_max) +
                                      " numerosities an episode with total " +
                                      std::to_string(total));
  }
  std::vector<double> weights(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const double profile = n <= 10 ? kReferenceProfile[n - 1] : kReferenceProfile[0] / double(n);
    weights[n - 1] = profile - 1.0;
  }
  auto counts = apportion(total - n_max, weights);
  for (int& c : counts) ++c;
  return counts;
}

DatasetConfig DatasetConfig::scaled(int total, int image_size) {
  DatasetConfig cfg;
  cfg.render.height = image_size;
  cfg.render.width = image_size;
  if (total == cfg.total) return cfg;
  cfg.total = total;
  cfg.val_size = static_cast<int>(std::lround(total * 242.0 / 1188.0));
  const int train = total - cfg.val_size;
  cfg.subset_sizes = {train / 10, train / 2, train};
  return cfg;
}

const std::vector<std::string>& DatasetManifest::subset(double fraction) const {
  return fraction_subsets.at(fraction_key(fraction));
}

std::vector<std::string> DatasetManifest::validation_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : episodes)
    if (e.split == Split::val) ids.push_back(e.id);
  return ids;
}

const ManifestEntry& DatasetManifest::entry(const std::string& id) const {
  for (const auto& e : episodes)
    if (e.id == id) return e;
  throw DatasetIoError("unknown episode id " + id);
}

const Episode& Dataset::episode(const std::string& id) const {
  auto it = episodes.find(id);
  if (it == episodes.end()) throw DatasetIoError("episode not loaded: " + id);
  return it->second;
}

WorkspaceScene sample_scene(std::uint64_t seed, std::size_t index, int count,
                            const RenderConfig& config) {
  Rng rng(derive_seed(seed, 1, index));
  const double r = 0.5 * WorkspaceScene::kBallDiameter;
  const auto& palette = ball_palette();
  WorkspaceScene scene;
  int attempts = 0;
  while (static_cast<int>(scene.balls.size()) < count) {
    if (++attempts > 100000) throw Error("ball placement did not converge");
    const Eigen::Vector2d p{uniform(rng, r, WorkspaceScene::kWidth - r),
                            uniform(rng, r, WorkspaceScene::kHeight - r)};
    if (!reachable(p - config.arm_base, config.links)) continue;
    const bool clear = std::all_of(scene.balls.begin(), scene.balls.end(), [&](const Ball& b) {
      return (b.center - p).norm() >= WorkspaceScene::kBallDiameter;
    });
    if (!clear) continue;
    scene.balls.push_back({p, palette[uniform_index(rng, palette.size())]});
  }
  return scene;
}

std::vector<std::size_t> visitation_order(const WorkspaceScene& scene) {
  std::vector<std::size_t> order;
  std::vector<bool> visited(scene.balls.size(), false);
  Eigen::Vector2d cursor = kHome;
  for (std::size_t step = 0; step < scene.balls.size(); ++step) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene.balls.size(); ++i) {
      if (visited[i]) continue;
      const double d = (scene.balls[i].center - cursor).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    visited[best] = true;
    order.push_back(best);
    cursor = scene.balls[best].center;
  }
  return order;
}

Episode build_episode(const std::string& id, const WorkspaceScene& scene,
                      const RenderConfig& config) {
  Episode ep;
  ep.id = id;
  ep.count = static_cast<int>(scene.balls.size());
  for (std::size_t ball : visitation_order(scene)) {
    Frame f;
    f.pose = inverse_kinematics(scene.balls[ball].center - config.arm_base, config.links);
    f.image = render_scene(scene, f.pose, config);
    ep.frames.push_back(std::move(f));
  }
  return ep;
}

DatasetManifest generate_manifest(std::uint64_t seed, const DatasetConfig& config) {
  if (config.val_size < 0 || config.val_size >= config.total) {
    throw ConfigError("validation size must be in [0, total)");
  }
  const auto per_count = zipf_counts(config.total, config.n_max);

  std::vector<int> labels;
  for (int n = 1; n <= config.n_max; ++n) labels.insert(labels.end(), per_count[n - 1], n);
  Rng label_rng(derive_seed(seed, 2));
  fisher_yates(labels, label_rng);

  DatasetManifest m;
  m.seed = seed;
  m.config = config;
  for (std::size_t i = 0; i < labels.size(); ++i) m.episodes.push_back({episode_name(i), labels[i]});

  // Stratified validation split.
  std::vector<double> weights(per_count.begin(), per_count.end());
  const auto val_per_count = apportion(config.val_size, weights);
  Rng split_rng(derive_seed(seed, 3));
  std::vector<std::vector<std::size_t>> by_count(config.n_max);
  for (std::size_t i = 0; i < m.episodes.size(); ++i) by_count[m.episodes[i].count - 1].push_back(i);
  for (int n = 0; n < config.n_max; ++n) {
    fisher_yates(by_count[n], split_rng);
    for (int k = 0; k < val_per_count[n]; ++k) m.episodes[by_count[n][k]].split = Split::val;
  }

  // Nested fraction subsets: a stratified ordering of the training episodes,
  // each subset a prefix of it.
  std::vector<std::tuple<double, int, std::size_t>> keyed;
  for (int n = 0; n < config.n_max; ++n) {
    std::vector<std::size_t> train;
    for (std::size_t i : by_count[n])
      if (m.episodes[i].split == Split::train) train.push_back(i);
    std::sort(train.begin(), train.end());
    fisher_yates(train, split_rng);
    for (std::size_t k = 0; k < train.size(); ++k) {
      keyed.emplace_back((k + 0.5) / static_cast<double>(train.size()), n, train[k]);
    }
  }
  std::sort(keyed.begin(), keyed.end());
  if (config.subset_sizes.size() != 3 ||
      !std::is_sorted(config.subset_sizes.begin(), config.subset_sizes.end()) ||
      config.subset_sizes.back() > static_cast<int>(keyed.size())) {
    throw ConfigError("subset sizes must be three non-decreasing sizes within the train split");
  }
  const char* keys[3] = {"0.1", "0.5", "1.0"};
  for (int s = 0; s < 3; ++s) {
    auto& ids = m.fraction_subsets[keys[s]];
    for (int k = 0; k < config.subset_sizes[s]; ++k) ids.push_back(m.episodes[std::get<2>(keyed[k])].id);
  }
  return m;
}

Dataset generate_dataset(std::uint64_t seed, const DatasetConfig& config) {
  Dataset ds;
  ds.manifest = generate_manifest(seed, config);
  for (std::size_t i = 0; i < ds.manifest.episodes.size(); ++i) {
    const auto& e = ds.manifest.episodes[i];
    const auto scene = sample_scene(seed, i, e.count, config.render);
    ds.episodes.emplace(e.id, build_episode(e.id, scene, config.render));
  }
  return ds;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["seed"] = m.seed;
  const auto& c = m.config;
  j["total"] = c.total;
  j["n_max"] = c.n_max;
  j["val_size"] = c.val_size;
  j["subset_sizes"] = c.subset_sizes;
  j["render"] = {{"height", c.render.height},
                 {"width", c.render.width},
                 {"view_extent_cm", c.render.view_extent},
                 {"link_lengths_cm", {c.render.links.upper, c.render.links.lower}},
                 {"arm_base_cm", {c.render.arm_base.x(), c.render.arm_base.y()}},
                 {"background", c.render.background}};
  json eps = json::array();
  for (const auto& e : m.episodes) {
    eps.push_back({{"id", e.id}, {"count", e.count}, {"split", e.split == Split::val ? "val" : "train"}});
  }
  j["episodes"] = std::move(eps);
  j["fraction_subsets"] = m.fraction_subsets;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.seed = j.at("seed").get<std::uint64_t>();
    auto& c = m.config;
    c.total = j.at("total").get<int>();
    c.n_max = j.at("n_max").get<int>();
    c.val_size = j.at("val_size").get<int>();
    c.subset_sizes = j.at("subset_sizes").get<std::vector<int>>();
    const auto& r = j.at("render");
    c.render.height = r.at("height").get<int>();
    c.render.width = r.at("width").get<int>();
    c.render.view_extent = r.at("view_extent_cm").get<double>();
    c.render.links.upper = r.at("link_lengths_cm").at(0).get<double>();
    c.render.links.lower = r.at("link_lengths_cm").at(1).get<double>();
    c.render.arm_base = {r.at("arm_base_cm").at(0).get<double>(), r.at("arm_base_cm").at(1).get<double>()};
    c.render.background = r.at("background").get<Rgb>();
    for (const auto& e : j.at("episodes")) {
      const auto split = e.at("split").get<std::string>();
      if (split != "train" && split != "val") throw DatasetIoError("bad split '" + split + "'");
      m.episodes.push_back({e.at("id").get<std::string>(), e.at("count").get<int>(),
                            split == "val" ? Split::val : Split::train});
    }
    m.fraction_subsets = j.at("fraction_subsets").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& ex) {
    throw DatasetIoError(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "episodes", ec);
  if (ec) throw DatasetIoError("cannot create " + (dir / "episodes").string() + ": " + ec.message());
  write_text_file(dir / "manifest.json", manifest_to_json(ds.manifest));
  for (const auto& e : ds.manifest.episodes) {
    const Episode& ep = ds.episode(e.id);
    const fs::path ep_dir = dir / "episodes" / e.id;
    fs::create_directories(ep_dir, ec);
    if (ec) throw DatasetIoError("cannot create " + ep_dir.string());
    const int h = ep.frames.front().image.height;
    const int w = ep.frames.front().image.width;
    std::ofstream bin(ep_dir / "frames.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw DatasetIoError("cannot open " + (ep_dir / "frames.bin").string());
    for (const auto& f : ep.frames) {
      bin.write(reinterpret_cast<const char*>(f.image.rgb.data()),
                static_cast<std::streamsize>(f.image.rgb.size() * sizeof(float)));
    }
    if (!bin) throw DatasetIoError("write failed for " + e.id);
    write_text_file(ep_dir / "shape.json",
                    json::array({static_cast<int>(ep.frames.size()), h, w, 3}).dump() + "\n");
    CsvWriter joints({"t", "j1", "j2"});
    for (std::size_t t = 0; t < ep.frames.size(); ++t) {
      joints.cell(t).cell(ep.frames[t].pose.j1).cell(ep.frames[t].pose.j2).end_row();
    }
    joints.write(ep_dir / "joints.csv");
  }
}

Dataset load_dataset(const std::filesystem::path& dir, std::span<const std::string> ids) {
  Dataset ds;
  ds.manifest = manifest_from_json(read_text_file(dir / "manifest.json"));
  std::vector<std::string> wanted(ids.begin(), ids.end());
  if (wanted.empty())
    for (const auto& e : ds.manifest.episodes) wanted.push_back(e.id);
  for (const auto& id : wanted) {
    const auto& entry = ds.manifest.entry(id);
    const auto ep_dir = dir / "episodes" / id;
    std::vector<int> shape;
    try {
      shape = json::parse(read_text_file(ep_dir / "shape.json")).get<std::vector<int>>();
    } catch (const json::exception& ex) {
      throw DatasetIoError("bad shape.json for " + id + ": " + ex.what());
    }
    if (shape.size() != 4 || shape[3] != 3 || shape[0] != entry.count) {
      throw DatasetIoError("shape.json inconsistent with manifest for " + id);
    }
    Episode ep;
    ep.id = id;
    ep.count = entry.count;
    std::ifstream bin(ep_dir / "frames.bin", std::ios::binary);
    if (!bin) throw DatasetIoError("cannot open frames for " + id);
    const auto table = read_csv(ep_dir / "joints.csv");
    if (static_cast<int>(table.rows.size()) != shape[0]) throw DatasetIoError("joints.csv length mismatch for " + id);
    for (int t = 0; t < shape[0]; ++t) {
      Frame f;
      f.image.height = shape[1];
      f.image.width = shape[2];
      f.image.rgb.resize(static_cast<std::size_t>(shape[1]) * shape[2] * 3);
      bin.read(reinterpret_cast<char*>(f.image.rgb.data()),
               static_cast<std::streamsize>(f.image.rgb.size() * sizeof(float)));
      if (!bin) throw DatasetIoError("truncated frames.bin for " + id);
      f.pose.j1 = std::stod(table.rows[t].at(1));
      f.pose.j2 = std::stod(table.rows[t].at(2));
      ep.frames.push_back(std::move(f));
    }
    ds.episodes.emplace(id, std::move(ep));
  }
  return ds;
}

}  // namespace ecl::envsim
