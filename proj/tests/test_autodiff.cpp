#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "ecl/autodiff/adam.hpp"
#include "ecl/autodiff/checkpoint.hpp"
#include "ecl/autodiff/gradcheck.hpp"
#include "ecl/autodiff/init.hpp"
#include "ecl/autodiff/layers.hpp"
#include "ecl/autodiff/losses.hpp"
#include "ecl/autodiff/lstm.hpp"

using namespace ecl;

namespace {

template <typename Derived>
void fill_normal(Eigen::PlainObjectBase<Derived>& m, Rng& rng, double scale = 1.0) {
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
}

// Test-only parameter bundle: a conv layer plus its input, so the gradient
// check covers input, weight and bias gradients together.
struct ConvProbe {
  using Scalar = double;
  RowMat<double> input;  // channels x pixels
  RowMat<double> weight;
  Vec<double> bias;

  template <typename Self, typename Sink>
  static void impl(Self& s, const std::string& prefix, Sink&& sink) {
    sink(join_name(prefix, "input"), {s.input.rows(), s.input.cols()}, s.input);
    sink(join_name(prefix, "weight"), {s.weight.rows(), s.weight.cols()}, s.weight);
    sink(join_name(prefix, "bias"), {s.bias.size()}, s.bias);
  }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) { impl(*this, p, s); }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) const { impl(*this, p, s); }
};

struct LstmProbe {
  using Scalar = double;
  LstmCellParams<double> cell;
  RowMat<double> inputs;  // T x input
  Vec<double> h0, c0;

  template <typename Self, typename Sink>
  static void impl(Self& s, const std::string& prefix, Sink&& sink) {
    s.cell.visit_named(join_name(prefix, "cell"), sink);
    sink(join_name(prefix, "inputs"), {s.inputs.rows(), s.inputs.cols()}, s.inputs);
    sink(join_name(prefix, "h0"), {s.h0.size()}, s.h0);
    sink(join_name(prefix, "c0"), {s.c0.size()}, s.c0);
  }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) { impl(*this, p, s); }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) const { impl(*this, p, s); }
};

struct VecProbe {
  using Scalar = double;
  Vec<double> x;
  template <typename Self, typename Sink>
  static void impl(Self& s, const std::string& prefix, Sink&& sink) {
    sink(join_name(prefix, "x"), {s.x.size()}, s.x);
  }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) { impl(*this, p, s); }
  template <typename Sink> void visit_named(const std::string& p, Sink&& s) const { impl(*this, p, s); }
};

}  // namespace

TEST_CASE("conv2d identity filter reproduces the input") {
  Rng rng(1);
  FeatureMap<double> x = FeatureMap<double>::zeros(3, 5, 6);
  for (Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = uniform01(rng);
  ConvParams<double> p(3, 3, 3);
  for (int c = 0; c < 3; ++c) p.weight(c, c * 9 + 4) = 1.0;  // center tap, same channel
  const auto y = conv2d(x, p.weight, p.bias, ConvGeometry{});
  CHECK(y.height == 5);
  CHECK(y.width == 6);
  CHECK((y.data - x.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d with zero weights outputs the bias") {
  FeatureMap<double> x = FeatureMap<double>::zeros(2, 7, 7);
  x.data.setRandom();
  ConvParams<double> p(2, 4, 3);
  p.bias << 0.5, -1.0, 2.0, 0.0;
  const auto y = conv2d(x, p.weight, p.bias, ConvGeometry{3, 2, 0});
  CHECK(y.height == 3);
  CHECK(y.width == 3);
  for (int c = 0; c < 4; ++c)
    for (Index i = 0; i < y.pixels(); ++i) CHECK(y.data(c, i) == p.bias(c));
}

TEST_CASE("conv2d rejects inconsistent shapes") {
  FeatureMap<double> x = FeatureMap<double>::zeros(2, 4, 4);
  ConvParams<double> p(3, 1, 3);
  CHECK_THROWS_AS(conv2d(x, p.weight, p.bias, ConvGeometry{}), DimensionError);
  ConvParams<double> q(2, 1, 3);
  CHECK_THROWS_AS(conv2d(x, q.weight, q.bias, ConvGeometry{3, 0, 1}), DimensionError);
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(2);
  for (const ConvGeometry g : {ConvGeometry{3, 1, 1}, ConvGeometry{3, 2, 1}, ConvGeometry{2, 1, 0}}) {
    ConvProbe probe;
    probe.input.resize(2, 5 * 6);
    probe.weight.resize(3, 2 * g.kernel * g.kernel);
    probe.bias.resize(3);
    fill_normal(probe.input, rng);
    fill_normal(probe.weight, rng);
    fill_normal(probe.bias, rng);
    const int oh = g.output_extent(5), ow = g.output_extent(6);
    RowMat<double> readout(3, oh * ow);
    fill_normal(readout, rng);

    auto loss = [&] {
      const auto y = conv2d(FeatureMap<double>(probe.input, 5, 6), probe.weight, probe.bias, g);
      return (y.data.array() * readout.array()).sum();
    };
    ConvCache<double> cache;
    conv2d(FeatureMap<double>(probe.input, 5, 6), probe.weight, probe.bias, g, &cache);
    ConvProbe grads = zeros_like(probe);
    const auto dx = conv2d_backward(FeatureMap<double>(readout, oh, ow), probe.weight, cache, g,
                                    grads.weight, grads.bias);
    grads.input = dx.data;
    const auto r = gradient_check(probe, loss, grads);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("pool, relu, average-pool and linear chain gradients") {
  Rng rng(3);
  ConvProbe probe;  // input only is used; reuse the probe type for its layout
  probe.input.resize(2, 6 * 6);
  fill_normal(probe.input, rng);
  probe.weight.resize(0, 0);
  probe.bias.resize(0);
  LinearParams<double> head(2, 3);
  fill_normal(head.weight, rng);
  fill_normal(head.bias, rng);
  Vec<double> readout(3);
  fill_normal(readout, rng);

  auto forward = [&](PoolCache<double>* pc, FeatureMap<double>* relu_out, Vec<double>* pooled) {
    FeatureMap<double> a(relu(probe.input), 6, 6);
    if (relu_out) *relu_out = a;
    const auto m = max_pool2(a, pc);
    const Vec<double> v = global_average_pool(m);
    if (pooled) *pooled = v;
    return linear(head, v);
  };
  auto loss = [&] { return forward(nullptr, nullptr, nullptr).dot(readout); };

  PoolCache<double> pc;
  FeatureMap<double> a;
  Vec<double> v;
  forward(&pc, &a, &v);
  LinearParams<double> head_grads = zeros_like(head);
  const Vec<double> dv = linear_backward(head, v, readout, head_grads);
  const auto dm = global_average_pool_backward(dv, 3, 3);
  const auto da = max_pool2_backward(dm, pc);
  ConvProbe grads = zeros_like(probe);
  grads.input = relu_backward(a.data, da.data);
  CHECK(gradient_check(probe, loss, grads).max_relative_error < 1e-4);
  CHECK(gradient_check(head, loss, head_grads).max_relative_error < 1e-4);
}

TEST_CASE("lstm_cell_step with zero parameters") {
  LstmCellParams<double> p(3, 4);
  const auto s = lstm_cell_step<double>(Vec<double>::Zero(3), Vec<double>::Zero(4), Vec<double>::Zero(4), p);
  CHECK(s.hidden.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.cell.cwiseAbs().maxCoeff() == 0.0);
  for (const auto* gate : {&s.forget, &s.input, &s.output}) {
    CHECK((gate->array() - 0.5).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lstm_cell_step pure memory") {
  Rng rng(4);
  LstmCellParams<double> p(3, 4);
  init_lstm(p, rng);
  p.b_forget.setConstant(50.0);
  p.b_input.setConstant(-50.0);
  Vec<double> x(3), h(4), c(4);
  fill_normal(x, rng);
  fill_normal(h, rng, 0.1);
  fill_normal(c, rng, 3.0);
  const auto s = lstm_cell_step(x, h, c, p);
  CHECK((s.cell - c).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lstm backprop through time matches finite differences") {
  Rng rng(5);
  const int T = 4, in = 3, hidden = 5;
  LstmProbe probe;
  probe.cell = LstmCellParams<double>(in, hidden);
  init_lstm(probe.cell, rng);
  probe.inputs.resize(T, in);
  fill_normal(probe.inputs, rng);
  probe.h0.resize(hidden);
  probe.c0.resize(hidden);
  fill_normal(probe.h0, rng, 0.5);
  fill_normal(probe.c0, rng, 0.5);
  RowMat<double> readout(T, hidden);
  fill_normal(readout, rng);
  Vec<double> cell_readout(hidden);
  fill_normal(cell_readout, rng);

  auto run = [&](std::vector<LstmStep<double>>* steps) {
    Vec<double> h = probe.h0, c = probe.c0;
    double total = 0;
    for (int t = 0; t < T; ++t) {
      auto s = lstm_cell_step<double>(probe.inputs.row(t).transpose(), h, c, probe.cell);
      total += s.hidden.dot(readout.row(t).transpose());
      h = s.hidden;
      c = s.cell;
      if (steps) steps->push_back(std::move(s));
    }
    return total + c.dot(cell_readout);
  };
  auto loss = [&] { return run(nullptr); };

  std::vector<LstmStep<double>> steps;
  run(&steps);
  LstmProbe grads = zeros_like(probe);
  Vec<double> dh = Vec<double>::Zero(hidden);
  Vec<double> dc = cell_readout;
  for (int t = T - 1; t >= 0; --t) {
    dh += readout.row(t).transpose();
    const auto g = lstm_cell_step_backward(steps[t], dh, dc, probe.cell, grads.cell);
    grads.inputs.row(t) = g.d_x.transpose();
    dh = g.d_h_prev;
    dc = g.d_c_prev;
  }
  grads.h0 = dh;
  grads.c0 = dc;
  const auto r = gradient_check(probe, loss, grads);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("softmax_cross_entropy") {
  const Vec<double> uniform_logits = Vec<double>::Constant(10, 0.3);
  CHECK(std::abs(softmax_cross_entropy(uniform_logits, 4).loss - std::log(10.0)) < 1e-12);

  Vec<double> saturated = Vec<double>::Zero(10);
  saturated(6) = 1e6;
  CHECK(softmax_cross_entropy(saturated, 7).loss == doctest::Approx(0.0));
  CHECK(std::isfinite(softmax_cross_entropy(saturated, 2).loss));

  CHECK_THROWS_AS(softmax_cross_entropy(uniform_logits, 0), LabelError);
  CHECK_THROWS_AS(softmax_cross_entropy(uniform_logits, 11), LabelError);

  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    VecProbe probe{Vec<double>(10)};
    fill_normal(probe.x, rng, 3.0);
    const int label = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto out = softmax_cross_entropy(probe.x, label);
    CHECK(out.loss >= 0.0);
    CHECK((out.grad - (softmax(probe.x) - Vec<double>::Unit(10, label - 1))).cwiseAbs().maxCoeff() < 1e-15);
    VecProbe grads{out.grad};
    auto loss = [&] { return softmax_cross_entropy(probe.x, label).loss; };
    // entries far below the 1e-4 floor are tail probabilities where only absolute error is meaningful
    CHECK(gradient_check(probe, loss, grads, 1e-5, 1e-4).max_relative_error < 1e-6);
  }
}

TEST_CASE("softmax normalizes") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec<double> z(10);
    fill_normal(z, rng, 20.0);
    CHECK(std::abs(softmax(z).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("mse_motor_loss") {
  Mat<double> pred(4, 2);
  pred << 0.1, 0.2, 0.3, -0.4, 0.5, 0.6, -0.7, 0.8;
  StepMask all = StepMask::Constant(4, true);
  CHECK(mse_motor_loss<double>(pred, pred, all).loss == 0.0);

  Mat<double> shifted = pred;
  shifted.col(0).array() -= 1.0;
  CHECK(mse_motor_loss<double>(pred, shifted, all).loss == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(8);
  Mat<double> target(4, 2);
  for (Index i = 0; i < target.size(); ++i) target.data()[i] = standard_normal(rng);
  StepMask mask(4);
  mask << true, false, true, true;
  double hand = 0;
  int valid = 0;
  for (int t = 0; t < 4; ++t) {
    if (!mask(t)) continue;
    hand += std::pow(pred(t, 0) - target(t, 0), 2) + std::pow(pred(t, 1) - target(t, 1), 2);
    ++valid;
  }
  const auto out = mse_motor_loss<double>(pred, target, mask);
  CHECK(out.loss == doctest::Approx(hand / valid).epsilon(1e-14));
  CHECK(out.grad.row(1).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(mse_motor_loss<double>(pred, target, StepMask::Constant(4, false)), EmptySequenceError);
  CHECK_THROWS_AS(mse_motor_loss<double>(pred, target.topRows(3), all), DimensionError);
}

TEST_CASE("adam_update") {
  SUBCASE("zero gradient without decay leaves parameters unchanged") {
    LinearParams<double> p(3, 2);
    p.weight.setRandom();
    const auto before = p.weight;
    auto state = make_adam_state(p, AdamConfig{1e-3, 0.9, 0.999, 1e-8, 0.0});
    const auto grads = zeros_like(p);
    for (int i = 0; i < 5; ++i) adam_update(p, grads, state);
    CHECK(p.weight == before);
  }

  SUBCASE("first step on a unit gradient") {
    VecProbe p{Vec<double>::Constant(1, 0.25)};
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    auto state = make_adam_state(p, cfg);
    adam_update(p, VecProbe{Vec<double>::Ones(1)}, state);
    CHECK(p.x(0) - 0.25 == doctest::Approx(-cfg.learning_rate / (1.0 + cfg.epsilon)).epsilon(1e-12));
    CHECK(state.step == 1);
  }

  SUBCASE("matches the textbook recursion with coupled decay") {
    // Independent scalar evaluation of the update equations.
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.1;
    double theta = 0.7, m = 0, v = 0;
    VecProbe p{Vec<double>::Constant(1, theta)};
    auto state = make_adam_state(p, AdamConfig{lr, b1, b2, eps, wd});
    const double gs[3] = {0.3, -1.2, 0.05};
    for (int t = 1; t <= 3; ++t) {
      const double g = gs[t - 1] + wd * theta;
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
      adam_update(p, VecProbe{Vec<double>::Constant(1, gs[t - 1])}, state);
      CHECK(p.x(0) == doctest::Approx(theta).epsilon(1e-13));
    }
  }

  SUBCASE("deterministic trajectories") {
    auto run = [] {
      Rng rng(9);
      LinearParams<float> p(4, 3);
      init_kaiming(p, rng);
      auto state = make_adam_state(p);
      for (int i = 0; i < 10; ++i) {
        auto g = zeros_like(p);
        fill_uniform(g.weight, 1.0, rng);
        adam_update(p, g, state);
      }
      return p.weight;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("gradient_check") {
  Rng rng(10);
  LinearParams<double> p(4, 3);
  fill_normal(p.weight, rng);
  fill_normal(p.bias, rng);
  Vec<double> x(4), r(3);
  fill_normal(x, rng);
  fill_normal(r, rng);
  auto loss = [&] { return linear(p, x).dot(r); };
  auto grads = zeros_like(p);
  linear_backward(p, x, r, grads);
  CHECK(gradient_check(p, loss, grads).max_relative_error < 1e-9);

  grads.weight(1, 2) *= 1.5;  // injected bug
  const auto bad = gradient_check(p, loss, grads);
  CHECK(bad.max_relative_error > 1e-2);
  CHECK(bad.worst_parameter == "weight");
  CHECK(bad.worst_index == 1 * 4 + 2);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(11);
  LstmCellParams<float> p(3, 2);
  init_lstm(p, rng);
  const auto path = std::filesystem::temp_directory_path() / "ecl_test_ckpt.bin";
  write_checkpoint(path, make_checkpoint(p, 17, {{"model", "probe"}}));
  const auto c = read_checkpoint(path);
  CHECK(c.step == 17);
  CHECK(c.meta.at("model") == "probe");
  CHECK(c.entries.front().name == "w_forget");
  CHECK(c.entries.front().shape == std::vector<Index>{2, 5});
  // C order of the logical shape.
  CHECK(c.entries.front().values[1 * 5 + 3] == p.w_forget(1, 3));
  LstmCellParams<float> q(3, 2);
  restore_checkpoint(c, q);
  CHECK(q.w_candidate == p.w_candidate);
  CHECK(q.b_forget == p.b_forget);
  LstmCellParams<float> wrong(4, 2);
  CHECK_THROWS_AS(restore_checkpoint(c, wrong), CheckpointError);
  std::filesystem::remove(path);
}
