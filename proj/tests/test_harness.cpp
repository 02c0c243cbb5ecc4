#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "doctest.h"
#include "ecl/core/csv.hpp"
#include "ecl/core/errors.hpp"
#include "ecl/harness/batching.hpp"
#include "ecl/harness/evaluate.hpp"
#include "ecl/harness/train.hpp"
#include "fixtures.hpp"

using namespace ecl;
using namespace ecl::harness;
namespace fs = std::filesystem;

namespace {

std::vector<int> labels_in_order(const std::vector<int>& labels, const std::vector<std::size_t>& order) {
  std::vector<int> out;
  for (auto i : order) out.push_back(labels[i]);
  return out;
}

SequenceInput<float> stub_input(const std::string& id, int label, Index steps, float motor_base) {
  SequenceInput<float> in;
  in.id = id;
  in.label = label;
  std::vector<FeatureMap<float>> frames;
  for (Index t = 0; t < steps; ++t) {
    auto fm = FeatureMap<float>::zeros(3, 4, 4);
    fm.data.setConstant(static_cast<float>(label) + 0.01f * static_cast<float>(t));
    frames.push_back(fm);
  }
  in.frames = std::make_shared<const std::vector<FeatureMap<float>>>(std::move(frames));
  in.motor_in.resize(steps, 2);
  for (Index t = 0; t < steps; ++t) in.motor_in.row(t) << motor_base + static_cast<float>(t), -motor_base;
  in.motor_target = in.motor_in.array() + 0.5f;
  in.valid = StepMask::Constant(steps, true);
  return in;
}

const fs::path& shared_dataset() {
  static const fs::path dir = testing::tiny_dataset("harness");
  return dir;
}

fs::path fresh_root(const std::string& name) {
  const auto root = fs::temp_directory_path() / ("ecl_test_runs_" + name);
  fs::remove_all(root);
  return root;
}

}  // namespace

TEST_CASE("order_curriculum") {
  const std::vector<int> labels{3, 1, 2};
  Rng rng(1);
  CHECK(labels_in_order(labels, order_curriculum(labels, Curriculum::EasyToHard, rng)) == std::vector<int>{1, 2, 3});
  CHECK(labels_in_order(labels, order_curriculum(labels, Curriculum::HardToEasy, rng)) == std::vector<int>{3, 2, 1});

  const std::vector<int> ties{2, 1, 2, 1, 2};
  CHECK(order_curriculum(ties, Curriculum::EasyToHard, rng) == std::vector<std::size_t>{1, 3, 0, 2, 4});
  CHECK(order_curriculum(ties, Curriculum::HardToEasy, rng) == std::vector<std::size_t>{0, 2, 4, 1, 3});

  std::vector<int> many(50);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<int>(i % 10) + 1;
  Rng a(9), b(9);
  const auto first = order_curriculum(many, Curriculum::Random, a);
  CHECK(first == order_curriculum(many, Curriculum::Random, b));
  for (auto strategy : {Curriculum::Random, Curriculum::EasyToHard, Curriculum::HardToEasy}) {
    auto order = order_curriculum(many, strategy, a);
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> identity(many.size());
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(order == identity);
  }
}

TEST_CASE("fit_stream truncates or holds") {
  Mat<float> s(3, 2);
  s << 1, 2, 3, 4, 5, 6;
  CHECK(fit_stream(s, 2) == s.topRows(2));
  const auto held = fit_stream(s, 5);
  CHECK(held.topRows(3) == s);
  CHECK(held.row(3) == s.row(2));
  CHECK(held.row(4) == s.row(2));
  CHECK(fit_stream(s, 3) == s);
}

TEST_CASE("shuffle_joints") {
  Rng rng(2);
  SUBCASE("batch of one is unchanged") {
    std::vector<SequenceInput<float>> batch{stub_input("a", 3, 3, 0.1f)};
    const auto before = batch;
    CHECK(shuffle_joints(batch, rng) == std::vector<std::size_t>{0});
    CHECK(batch[0].motor_in == before[0].motor_in);
    CHECK(batch[0].motor_target == before[0].motor_target);
  }
  SUBCASE("batch of two is unchanged or swapped") {
    std::set<std::vector<std::size_t>> seen;
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<SequenceInput<float>> batch{stub_input("a", 2, 2, 0.1f), stub_input("b", 4, 4, 0.7f)};
      const auto before = batch;
      const auto perm = shuffle_joints(batch, rng);
      seen.insert(perm);
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(batch[i].frames == before[i].frames);
        CHECK(batch[i].label == before[i].label);
        CHECK(batch[i].motor_in == fit_stream(before[perm[i]].motor_in, before[i].steps()));
      }
    }
    CHECK(seen == std::set<std::vector<std::size_t>>{{0, 1}, {1, 0}});
  }
  SUBCASE("donor streams form the original multiset") {
    std::vector<SequenceInput<float>> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(stub_input("e" + std::to_string(i), i % 10 + 1, i % 10 + 1, 0.03f * i));
    const auto before = batch;
    const auto perm = shuffle_joints(batch, rng);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> identity(batch.size());
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(sorted == identity);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& donor = before[perm[i]];
      CHECK(batch[i].motor_in == fit_stream(donor.motor_in, before[i].steps()));
      CHECK(batch[i].motor_target == fit_stream(donor.motor_target, before[i].steps()));
      CHECK(batch[i].label == before[i].label);
      for (std::size_t t = 0; t < batch[i].images().size(); ++t)
        CHECK(batch[i].images()[t].data == before[i].images()[t].data);
    }
  }
  SUBCASE("target mode keeps the motor inputs") {
    std::vector<SequenceInput<float>> batch;
    for (int i = 0; i < 8; ++i) batch.push_back(stub_input("e" + std::to_string(i), 3, 3, 0.1f * i));
    const auto before = batch;
    const auto perm = shuffle_joints(batch, rng, ShuffleMode::Targets);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CHECK(batch[i].motor_in == before[i].motor_in);
      CHECK(batch[i].motor_target == before[perm[i]].motor_target);
    }
  }
}

TEST_CASE("score_predictions") {
  const std::vector<int> labels{1, 1, 2, 3, 10, 10, 10};
  const auto oracle = score_predictions(labels, labels);
  CHECK(oracle.accuracy == 1.0);
  for (int n : {0, 1, 2, 9}) CHECK(oracle.per_number[static_cast<std::size_t>(n)] == 1.0);
  CHECK(std::isnan(oracle.per_number[4]));

  // Five hand-labeled episodes: two of five correct.
  const std::vector<int> truth{1, 2, 2, 5, 7}, guess{1, 3, 2, 4, 1};
  const auto hand = score_predictions(truth, guess);
  CHECK(hand.accuracy == doctest::Approx(2.0 / 5.0));
  CHECK(hand.per_number[0] == 1.0);
  CHECK(hand.per_number[1] == 0.5);
  CHECK(hand.per_number[4] == 0.0);
  CHECK(hand.per_number[6] == 0.0);
  CHECK(hand.support[1] == 2);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> l(57), p(57);
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] = static_cast<int>(uniform_index(rng, 10)) + 1;
      p[i] = uniform01(rng) < 0.6 ? l[i] : static_cast<int>(uniform_index(rng, 10)) + 1;
    }
    const auto r = score_predictions(l, p);
    double reweighted = 0.0;
    for (std::size_t n = 0; n < 10; ++n)
      if (r.support[n] > 0) reweighted += r.per_number[n] * r.support[n] / 57.0;
    CHECK(std::abs(reweighted - r.accuracy) < 1e-12);
  }
  CHECK_THROWS_AS(score_predictions(std::vector<int>{}, std::vector<int>{}), EmptySequenceError);
}

TEST_CASE("evaluate with uniform logits picks the lowest class") {
  const auto data = load_train_data(testing::tiny_run(shared_dataset(), "unused", "u"));
  EmbodiedParams<float> p{testing::small_widths()};
  const auto r = evaluate(p, data.val);
  double prior = 0.0;
  for (const auto& in : data.val) prior += in.label == 1 ? 1.0 : 0.0;
  CHECK(r.accuracy == doctest::Approx(prior / static_cast<double>(data.val.size())));
  CHECK(r.per_number[0] == 1.0);
  for (std::size_t n = 1; n < 10; ++n) CHECK(r.per_number[n] == 0.0);
  REQUIRE(r.motor_mse.has_value());
  // Zero predictions: squared joint-vector norm of the targets, averaged over steps.
  double sq = 0.0, steps = 0.0;
  for (const auto& in : data.val) {
    sq += in.motor_target.cast<double>().squaredNorm();
    steps += static_cast<double>(in.motor_target.rows());
  }
  CHECK(*r.motor_mse == doctest::Approx(sq / steps).epsilon(1e-6));

  VisionParams<float> v{testing::small_widths()};
  CHECK(evaluate(v, data.val, VisionMode::Pool).accuracy == doctest::Approx(prior / static_cast<double>(data.val.size())));
}

TEST_CASE("run config validation and parsing") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.shuffle_joints = true;
  c.model = ModelKind::VisionSingle;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.fraction = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.id = "../escape";
  CHECK_THROWS_AS(c.validate(), ConfigError);

  RunConfig full;
  full.id = "x";
  full.model = ModelKind::VisionPool;
  full.curriculum = Curriculum::HardToEasy;
  full.lambda = 0.0;
  full.seed = 12;
  full.widths.hidden = 32;
  full.optimizer.learning_rate = 5e-4;
  const auto back = run_config_from_json(to_json(full));
  CHECK(to_json(back) == to_json(full));

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"epochz", 3}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"model", "robot"}}), ConfigError);
  try {
    parse_json_text("{\n  \"epochs\": 3,\n  \"seed\": ]\n}", "bad.json");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad.json:3:") != std::string::npos);
  }
}

TEST_CASE("training smoke run") {
  const auto root = fresh_root("smoke");
  auto config = testing::tiny_run(shared_dataset(), root, "smoke");
  const auto record = train(config);
  REQUIRE(record.epochs.size() == 5);
  int decreases = 0;
  for (std::size_t e = 1; e < record.epochs.size(); ++e)
    decreases += record.epochs[e].train_loss < record.epochs[e - 1].train_loss ? 1 : 0;
  CHECK(decreases >= 3);

  const auto dir = config.run_dir();
  for (const char* f : {"config.json", "learning_curve.csv", "per_number.csv", "checkpoint_best.bin", "checkpoint_final.bin"})
    CHECK(fs::exists(dir / f));
  CHECK(run_complete(dir));
  const auto per = read_csv(dir / "per_number.csv");
  CHECK(per.rows.size() == 50);
  const auto curve = read_csv(dir / "learning_curve.csv");
  CHECK(curve.header == std::vector<std::string>{"epoch", "val_count_acc", "val_motor_mse", "train_loss"});
  for (const auto& row : curve.rows) {
    CHECK_FALSE(row[2].empty());
    const double acc = std::stod(row[1]);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
  for (const auto& e : record.epochs) CHECK(e.val_count_acc <= record.epochs[static_cast<std::size_t>(record.best_epoch - 1)].val_count_acc);
  for (int e = 1; e < record.best_epoch; ++e)
    CHECK(record.epochs[static_cast<std::size_t>(e - 1)].val_count_acc < record.epochs[static_cast<std::size_t>(record.best_epoch - 1)].val_count_acc);
  CHECK(load_run(dir, "best").epoch == record.best_epoch);
  CHECK(load_run(dir, "final").epoch == 5);

  SUBCASE("same seed gives identical records") {
    auto again = config;
    again.id = "smoke_again";
    train(again);
    CHECK(read_text_file(dir / "learning_curve.csv") == read_text_file(again.run_dir() / "learning_curve.csv"));
    CHECK(read_text_file(dir / "per_number.csv") == read_text_file(again.run_dir() / "per_number.csv"));
  }
  SUBCASE("lambda zero leaves the motor column empty") {
    auto quiet = config;
    quiet.id = "smoke_lambda0";
    quiet.lambda = 0.0;
    quiet.epochs = 2;
    const auto r = train(quiet);
    for (const auto& e : r.epochs) CHECK_FALSE(e.val_motor_mse.has_value());
    for (const auto& row : read_csv(quiet.run_dir() / "learning_curve.csv").rows) CHECK(row[2].empty());
  }
  SUBCASE("shuffled and vision runs train") {
    auto shuffled = config;
    shuffled.id = "smoke_shuffled";
    shuffled.shuffle_joints = true;
    shuffled.epochs = 2;
    CHECK(train(shuffled).epochs.size() == 2);
    auto vision = config;
    vision.id = "smoke_vision";
    vision.model = ModelKind::VisionSingle;
    vision.epochs = 2;
    CHECK(train(vision).epochs.size() == 2);
    for (const auto& row : read_csv(vision.run_dir() / "learning_curve.csv").rows) CHECK(row[2].empty());
  }
  SUBCASE("divergence aborts") {
    auto wild = config;
    wild.id = "smoke_wild";
    wild.optimizer.learning_rate = 1e30;
    CHECK_THROWS_AS(train(wild), DivergenceError);
    CHECK_FALSE(run_complete(wild.run_dir()));
  }
  fs::remove_all(root);
}
