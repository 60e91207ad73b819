#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "navcast/lstm.hpp"
#include "support.hpp"

using namespace navcast;
using Catch::Matchers::WithinAbs;

namespace {

LstmCellParams unit_cell() {
  auto p = LstmCellParams::zeros(1, 1);
  for (auto& w : p.W) w.setOnes();
  return p;
}

/// Weights fixed by closed-form expressions so an outside implementation can
/// reproduce the forward pass exactly.
LstmNetwork formula_network() {
  const std::size_t H = 3;
  LstmNetwork net;
  std::size_t in = 1;
  for (std::size_t l = 0; l < 2; ++l) {
    auto p = LstmCellParams::zeros(in, H);
    for (std::size_t g = 0; g < 4; ++g) {
      for (Eigen::Index r = 0; r < p.W[g].rows(); ++r) {
        for (Eigen::Index c = 0; c < p.W[g].cols(); ++c)
          p.W[g](r, c) = 0.1 * std::sin(1.0 + static_cast<double>(r + 2 * c + 3 * g + 5 * l));
        p.b[g](r) = 0.05 * std::cos(static_cast<double>(r + g + l));
      }
    }
    net.layers.push_back(p);
    in = H;
  }
  net.head.w.resize(3);
  for (Eigen::Index r = 0; r < 3; ++r) net.head.w(r) = 0.3 * std::cos(static_cast<double>(r));
  net.head.b = 0.1;
  return net;
}

}  // namespace

TEST_CASE("gate values for the unit-weight scalar cell", "[lstm][cell]") {
  // Unit weights, zero biases, x = 1, zero state:
  // f = i = o = sigmoid(1), c~ = tanh(1), c = i c~, h = o tanh(c).
  const auto a = cell_step(unit_cell(), Eigen::VectorXd::Ones(1), LstmState::zeros(1));
  CHECK_THAT(a.f(0), WithinAbs(0.7310585786300049, 1e-15));
  CHECK_THAT(a.i(0), WithinAbs(0.7310585786300049, 1e-15));
  CHECK_THAT(a.o(0), WithinAbs(0.7310585786300049, 1e-15));
  CHECK_THAT(a.c_tilde(0), WithinAbs(0.7615941559557649, 1e-15));
  CHECK_THAT(a.state.c(0), WithinAbs(0.5567699411459397, 1e-15));
  CHECK_THAT(a.state.h(0), WithinAbs(0.36960635293570576, 1e-15));
}

TEST_CASE("a saturated forget gate keeps the memory", "[lstm][cell]") {
  auto p = LstmCellParams::zeros(1, 1);
  p.b[kForget](0) = 50.0;   // f -> 1
  p.b[kInput](0) = -50.0;   // i -> 0
  p.b[kOutput](0) = 50.0;   // o -> 1
  LstmState s{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.8)};
  for (int t = 0; t < 100; ++t) s = cell_forward(p, Eigen::VectorXd::Constant(1, std::sin(t)), s);
  CHECK_THAT(s.c(0), WithinAbs(0.8, 1e-12));
  CHECK_THAT(s.h(0), WithinAbs(std::tanh(0.8), 1e-12));

  p.b[kForget](0) = -50.0;  // f -> 0: memory is erased in one step
  s = cell_forward(p, Eigen::VectorXd::Ones(1), s);
  CHECK_THAT(s.c(0), WithinAbs(0.0, 1e-12));
}

TEST_CASE("two-layer forward pass matches an outside computation", "[lstm][forward]") {
  const auto net = formula_network();
  const std::vector<double> x{0.5, -0.2, 0.1, 0.4};
  CHECK_THAT(forward(net, x), WithinAbs(0.08966713305592684, 1e-13));
}

TEST_CASE("batched forward equals per-window cell recursion", "[lstm][forward]") {
  const auto net = init_network(1, 6, 3, 17);
  Eigen::MatrixXd w(4, 7);
  w.setRandom();
  const Eigen::VectorXd batched = forward_batch(net, w);
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    std::vector<LstmState> state(net.layers.size(), LstmState::zeros(6));
    for (Eigen::Index t = 0; t < w.cols(); ++t) {
      Eigen::VectorXd in = Eigen::VectorXd::Constant(1, w(r, t));
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        state[l] = cell_forward(net.layers[l], in, state[l]);
        in = state[l].h;
      }
    }
    const double expected = (net.head.w * state.back().h)(0) + net.head.b;
    CHECK_THAT(batched(r), WithinAbs(expected, 1e-13));
  }
}

TEST_CASE("BPTT agrees with central differences", "[lstm][gradient]") {
  const auto one = testing::check_gradients(3, 1, 4, 101);
  INFO("worst tensor " << one.worst_tensor);
  CHECK(one.max_relative_error < 1e-4);
  CHECK(one.parameters == 4 * 3 * 4 + 4 * 3 + 3 + 1);

  const auto two = testing::check_gradients(5, 2, 6, 202);
  INFO("worst tensor " << two.worst_tensor);
  CHECK(two.max_relative_error < 1e-4);
}

TEST_CASE("initialisation follows the stated ranges", "[lstm][init]") {
  auto net = init_network(1, 8, 2, 5, HeadInit::zero);
  for (std::size_t l = 0; l < 2; ++l) {
    const double in = l == 0 ? 1.0 : 8.0;
    const double k = 1.0 / std::sqrt(8.0 + in);
    for (const auto& w : net.layers[l].W) CHECK(w.cwiseAbs().maxCoeff() <= k);
    CHECK(net.layers[l].b[kForget].isOnes());
    CHECK(net.layers[l].b[kInput].isZero());
  }
  CHECK(net.head.w.isZero());
  CHECK(forward(net, std::vector<double>{0.3, 0.1}) == 0.0);
  CHECK(tensor_names(net).front() == "layers[0].W_f");
  CHECK(parameter_count(net) == static_cast<std::size_t>(flatten(net).size()));
}

TEST_CASE("flatten and unflatten are inverse", "[lstm]") {
  auto net = init_network(1, 4, 2, 9);
  const Eigen::VectorXd flat = flatten(net);
  auto other = zeros_like(net);
  unflatten(other, flat);
  CHECK(flatten(other) == flat);
}

TEST_CASE("make_windows builds next-value pairs", "[lstm][train]") {
  const std::vector<double> v{0, 1, 2, 3, 4, 5};
  const ScaleParams identity{-1.0, 1.0, -1.0, 1.0};
  const auto w = make_windows(v, 2, identity);
  REQUIRE(w.count() == 4);
  CHECK(w.inputs(0, 0) == 0.0);
  CHECK(w.inputs(0, 1) == 1.0);
  CHECK(w.targets(0) == 2.0);
  CHECK(w.targets(3) == 5.0);
  const auto tail = make_windows(v, 2, identity, 4);
  CHECK(tail.count() == 2);
  CHECK(tail.targets(0) == 4.0);
  CHECK_THROWS(make_windows(v, 6, identity));
}

TEST_CASE("training is deterministic and reduces the loss", "[lstm][train]") {
  std::vector<double> v(200);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = std::sin(0.3 * static_cast<double>(t));
  const auto data = make_windows(v, 8, fit_minmax(v));
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.hidden_dim = 6;
  cfg.layers = 1;
  cfg.window_m = 8;
  cfg.batch_size = 16;
  cfg.seed = 4;
  const auto a = train(init_network(1, 6, 1, 4), data, cfg);
  const auto b = train(init_network(1, 6, 1, 4), data, cfg);
  CHECK(a.loss_history == b.loss_history);
  auto na = a.net;
  auto nb = b.net;
  CHECK(flatten(na) == flatten(nb));
  CHECK(a.loss_history.back() < 0.5 * a.loss_history.front());
}

TEST_CASE("validation checkpoint returns the best weights", "[lstm][train]") {
  std::vector<double> v(160);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = std::sin(0.25 * static_cast<double>(t));
  const auto scale = fit_minmax(v);
  const auto data = make_windows(std::span<const double>(v).first(120), 6, scale);
  const auto val = make_windows(v, 6, scale, 120);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.hidden_dim = 4;
  cfg.layers = 1;
  cfg.window_m = 6;
  const auto r = train(init_network(1, 4, 1, 2), data, cfg, &val);
  REQUIRE(r.val_history.size() == 8);
  REQUIRE(r.initial_val_mse.has_value());
  const double best = *std::min_element(r.val_history.begin(), r.val_history.end());
  CHECK(r.best_val_mse == std::min(best, *r.initial_val_mse));
  const Eigen::VectorXd pred = forward_batch(r.net, val.inputs);
  const double mse = (pred - val.targets).squaredNorm() / static_cast<double>(val.count());
  CHECK_THAT(mse, WithinAbs(r.best_val_mse, 1e-15));
}

TEST_CASE("train config validation", "[lstm][train]") {
  TrainConfig cfg;
  CHECK(cfg.learning_rate == 0.005);
  CHECK(cfg.epochs == 100);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.layers == 3);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigurationError);
}
