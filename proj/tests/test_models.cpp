#include <algorithm>

#include "doctest.h"
#include "ecl/autodiff/gradcheck.hpp"
#include "ecl/envsim/dataset.hpp"
#include "ecl/models/embodied.hpp"
#include "ecl/models/vision.hpp"

using namespace ecl;
using namespace ecl::envsim;

namespace {

ModelWidths tiny_widths() {
  ModelWidths w;
  w.conv_channels = {2, 3, 4};
  w.visual = 4;
  w.motor_hidden = 3;
  w.motor = 4;
  w.hidden = 5;
  w.classifier_hidden = 6;
  return w;
}

template <typename Scalar>
SequenceInput<Scalar> sample_input(int count, int image_size, std::uint64_t seed = 3) {
  RenderConfig rc;
  rc.height = rc.width = image_size;
  const auto scene = sample_scene(seed, 0, count, rc);
  return make_sequence_input<Scalar>(build_episode("ep", scene, rc));
}

template <typename Params>
void randomize(Params& p, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& np : param_list(p)) {
    auto f = np.flat();
    for (Index i = 0; i < f.size(); ++i) f(i) = scale * standard_normal(rng);
  }
}

}  // namespace

TEST_CASE("make_sequence_input targets") {
  const auto in = sample_input<double>(4, 16);
  CHECK(in.steps() == 4);
  CHECK(in.label == 4);
  CHECK(in.motor_target.row(0) == in.motor_in.row(1));
  CHECK(in.motor_target.row(3) == in.motor_in.row(3));
  CHECK(in.motor_in.cwiseAbs().maxCoeff() <= 1.0);
  RenderConfig rc;
  const auto ep = build_episode("e", sample_scene(3, 0, 2, rc), rc);
  const auto cur = make_sequence_input<double>(ep, MotorTarget::Current);
  CHECK(cur.motor_target == cur.motor_in);
  Episode empty;
  CHECK_THROWS_AS(make_sequence_input<double>(empty), EmptySequenceError);
}

TEST_CASE("embodied_forward shape contract") {
  EmbodiedParams<float> p{ModelWidths{}};
  Rng rng(1);
  init_embodied(p, rng);
  for (int n : {1, 4, 10}) {
    const auto in = sample_input<float>(n, 64);
    const auto out = embodied_forward(in, p);
    CHECK(out.logits.size() == 10);
    CHECK(out.motor_pred.rows() == n);
    CHECK(out.motor_pred.cols() == 2);
    CHECK(out.trace.layer1.rows() == n);
    CHECK(out.trace.layer1.cols() == 128);
    CHECK(out.trace.layer2.size() == n * 128);
    CHECK(out.trace.visual.cols() == 64);
    CHECK(out.trace.final_conv.channels() == 32);
  }
}

TEST_CASE("zero parameters give uniform logits") {
  const auto in = sample_input<double>(3, 16);
  EmbodiedParams<double> e{ModelWidths{}};
  const auto eo = embodied_forward(in, e);
  CHECK(eo.logits.maxCoeff() == eo.logits.minCoeff());
  VisionParams<double> v{ModelWidths{}};
  const auto vo = vision_single_forward(in.images().back(), v);
  CHECK(vo.logits.maxCoeff() == vo.logits.minCoeff());
  CHECK(std::abs(softmax_cross_entropy(vo.logits, 2).loss - std::log(10.0)) < 1e-12);
}

TEST_CASE("eval forward is deterministic, train forward applies dropout") {
  EmbodiedParams<float> p{ModelWidths{}};
  Rng rng(2);
  init_embodied(p, rng);
  const auto in = sample_input<float>(5, 32);
  const auto a = embodied_forward(in, p);
  const auto b = embodied_forward(in, p);
  CHECK(a.trace.layer1 == b.trace.layer1);
  CHECK(a.trace.layer2 == b.trace.layer2);
  CHECK(a.logits == b.logits);

  Rng r1(9), r2(9);
  const auto t1 = embodied_forward(in, p, {true, &r1});
  const auto t2 = embodied_forward(in, p, {true, &r2});
  CHECK(t1.logits == t2.logits);
  CHECK(t1.trace.layer1 == a.trace.layer1);  // dropout sits above layer 1
  CHECK(t1.trace.layer2 != a.trace.layer2);
  const double dropped = (t1.tape.dropout_mask.array() == 0.0f).cast<double>().mean();
  CHECK(dropped == doctest::Approx(0.3).epsilon(0.2));
  CHECK_THROWS_AS(embodied_forward(in, p, {true, nullptr}), ConfigError);
}

TEST_CASE("motor ablation removes every motor pathway") {
  EmbodiedParams<double> p{tiny_widths()};
  Rng rng(4);
  init_embodied(p, rng);
  auto in = sample_input<double>(4, 16);
  auto moved = in;
  moved.motor_in.array() += 0.25;
  EmbodiedOptions ablate;
  ablate.zero_motor = true;
  CHECK(embodied_forward(in, p, ablate).logits == embodied_forward(moved, p, ablate).logits);
  CHECK(embodied_forward(in, p).logits != embodied_forward(moved, p).logits);

  auto grads = zeros_like(p);
  embodied_loss_and_grad(in, p, 1.0, ablate, grads);
  CHECK(grads.motor_fc1.weight.isZero(0));
  CHECK(grads.motor_fc2.weight.isZero(0));
}

TEST_CASE("empty episodes are rejected") {
  EmbodiedParams<double> p{tiny_widths()};
  SequenceInput<double> empty;
  CHECK_THROWS_AS(embodied_forward(empty, p), EmptySequenceError);
  VisionParams<double> v{tiny_widths()};
  CHECK_THROWS_AS(vision_pooled_forward(std::vector<FeatureMap<double>>{}, v), EmptySequenceError);
}

TEST_CASE("embodied combined-loss gradient matches finite differences") {
  EmbodiedParams<double> p{tiny_widths()};
  randomize(p, 5, 0.5);
  const auto in = sample_input<double>(3, 8);
  for (double lambda : {0.0, 1.0}) {
    for (bool train : {false, true}) {
      auto opts = [&](Rng& r) {
        EmbodiedOptions o;
        o.train = train;
        o.rng = &r;
        return o;
      };
      auto loss = [&] {
        Rng r(77);
        auto scratch = zeros_like(p);
        return static_cast<double>(embodied_loss_and_grad(in, p, lambda, opts(r), scratch).total);
      };
      Rng r(77);
      auto grads = zeros_like(p);
      const auto l = embodied_loss_and_grad(in, p, lambda, opts(r), grads);
      CHECK(l.motor.has_value() == (lambda != 0.0));
      if (l.motor) CHECK(l.total == doctest::Approx(l.count + lambda * *l.motor).epsilon(1e-15));
      const auto res = gradient_check(p, loss, grads);
      INFO("lambda " << lambda << " train " << train << " worst " << res.worst_parameter);
      CHECK(res.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("vision gradients match finite differences") {
  VisionParams<double> p{tiny_widths()};
  randomize(p, 6, 0.5);
  const auto in = sample_input<double>(3, 8);
  for (auto mode : {VisionMode::Single, VisionMode::Pool}) {
    auto loss = [&] {
      auto scratch = zeros_like(p);
      return vision_loss_and_grad(in, p, mode, scratch);
    };
    auto grads = zeros_like(p);
    vision_loss_and_grad(in, p, mode, grads);
    CHECK(gradient_check(p, loss, grads).max_relative_error < 1e-4);
  }
}

TEST_CASE("mean-pool baseline properties") {
  VisionParams<float> p{ModelWidths{}};
  Rng rng(7);
  init_vision(p, rng);
  const auto in = sample_input<float>(6, 32);

  const auto single = vision_single_forward(in.images()[2], p).logits;
  CHECK(vision_single_forward(in.images()[2], p).logits == single);
  CHECK(vision_pooled_forward(std::vector<FeatureMap<float>>{in.images()[2]}, p).logits == single);
  const std::vector<FeatureMap<float>> repeated(5, in.images()[2]);
  CHECK((vision_pooled_forward(repeated, p).logits - single).cwiseAbs().maxCoeff() < 1e-5f);

  auto frames = in.images();
  const auto forward = vision_pooled_forward(frames, p).logits;
  std::reverse(frames.begin(), frames.end());
  CHECK(vision_pooled_forward(frames, p).logits == forward);
  Rng shuffle_rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    fisher_yates(frames, shuffle_rng);
    CHECK(vision_pooled_forward(frames, p).logits == forward);
  }
}
