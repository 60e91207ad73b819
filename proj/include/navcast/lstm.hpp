#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navcast/error.hpp"
#include "navcast/series.hpp"

namespace navcast {

/// Gate order inside LstmCellParams::W / b.
enum Gate : std::size_t { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

inline constexpr std::array<const char*, 4> kGateNames{"f", "i", "c", "o"};

/// Weights of one LSTM layer. Every W[g] is hidden x (hidden + input) and acts
/// on the concatenation [h_{t-1}, x_t] (hidden state first).
struct LstmCellParams {
  std::array<Eigen::MatrixXd, 4> W;
  std::array<Eigen::VectorXd, 4> b;

  [[nodiscard]] static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmCellParams p;
    const auto h = static_cast<Eigen::Index>(hidden_dim);
    const auto cols = static_cast<Eigen::Index>(hidden_dim + input_dim);
    for (std::size_t g = 0; g < 4; ++g) {
      p.W[g] = Eigen::MatrixXd::Zero(h, cols);
      p.b[g] = Eigen::VectorXd::Zero(h);
    }
    return p;
  }

  [[nodiscard]] std::size_t hidden_dim() const { return static_cast<std::size_t>(W[0].rows()); }
  [[nodiscard]] std::size_t input_dim() const {
    return static_cast<std::size_t>(W[0].cols() - W[0].rows());
  }
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  [[nodiscard]] static LstmState zeros(std::size_t hidden_dim) {
    const auto h = static_cast<Eigen::Index>(hidden_dim);
    return {Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h)};
  }
};

/// Gate activations of one cell step together with the new state.
struct CellActivations {
  Eigen::VectorXd f;
  Eigen::VectorXd i;
  Eigen::VectorXd c_tilde;
  Eigen::VectorXd o;
  LstmState state;
};

/// Affine map from the top hidden state to the scalar prediction.
struct OutputHead {
  Eigen::RowVectorXd w;
  double b = 0.0;
};

/// Stacked LSTM layers followed by a linear output head. Also used as the
/// gradient container, since gradients mirror the parameter layout.
struct LstmNetwork {
  std::vector<LstmCellParams> layers;
  OutputHead head;

  [[nodiscard]] std::size_t input_dim() const { return layers.front().input_dim(); }
  [[nodiscard]] std::size_t hidden_dim() const { return layers.back().hidden_dim(); }
};

using LstmGradients = LstmNetwork;

inline void validate(const LstmNetwork& net) {
  if (net.layers.empty()) throw ConfigurationError("LstmNetwork: needs at least one layer");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const auto h = layer.W[0].rows();
    if (h == 0 || layer.W[0].cols() <= h)
      throw ConfigurationError("LstmNetwork: layer " + std::to_string(l) + " has bad shape");
    for (std::size_t g = 0; g < 4; ++g) {
      if (layer.W[g].rows() != h || layer.W[g].cols() != layer.W[0].cols() || layer.b[g].size() != h)
        throw ConfigurationError("LstmNetwork: layer " + std::to_string(l) + " gate " +
                                 kGateNames[g] + " shape mismatch");
    }
    if (l > 0 && layer.input_dim() != net.layers[l - 1].hidden_dim())
      throw ConfigurationError("LstmNetwork: layer " + std::to_string(l) +
                               " input does not match previous hidden size");
  }
  if (static_cast<std::size_t>(net.head.w.size()) != net.hidden_dim())
    throw ConfigurationError("LstmNetwork: output head width mismatch");
}

/// Every parameter tensor in a fixed order: per layer W_f,W_i,W_c,W_o,
/// b_f,b_i,b_c,b_o; then head weights and head bias.
[[nodiscard]] inline std::vector<std::span<double>> tensors(LstmNetwork& net) {
  std::vector<std::span<double>> out;
  for (auto& layer : net.layers) {
    for (auto& w : layer.W) out.emplace_back(w.data(), static_cast<std::size_t>(w.size()));
    for (auto& b : layer.b) out.emplace_back(b.data(), static_cast<std::size_t>(b.size()));
  }
  out.emplace_back(net.head.w.data(), static_cast<std::size_t>(net.head.w.size()));
  out.emplace_back(&net.head.b, 1);
  return out;
}

/// Human-readable names matching `tensors` order.
[[nodiscard]] inline std::vector<std::string> tensor_names(const LstmNetwork& net) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (const char* g : kGateNames) out.push_back("layers[" + std::to_string(l) + "].W_" + g);
    for (const char* g : kGateNames) out.push_back("layers[" + std::to_string(l) + "].b_" + g);
  }
  out.emplace_back("head.w");
  out.emplace_back("head.b");
  return out;
}

[[nodiscard]] inline std::size_t parameter_count(LstmNetwork& net) {
  std::size_t n = 0;
  for (auto t : tensors(net)) n += t.size();
  return n;
}

[[nodiscard]] inline Eigen::VectorXd flatten(LstmNetwork& net) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count(net)));
  Eigen::Index pos = 0;
  for (auto t : tensors(net))
    for (double v : t) out(pos++) = v;
  return out;
}

inline void unflatten(LstmNetwork& net, const Eigen::VectorXd& flat) {
  Eigen::Index pos = 0;
  for (auto t : tensors(net))
    for (double& v : t) v = flat(pos++);
}

/// A network of the same shape with every entry zero.
[[nodiscard]] inline LstmNetwork zeros_like(const LstmNetwork& net) {
  LstmNetwork out;
  for (const auto& layer : net.layers)
    out.layers.push_back(LstmCellParams::zeros(layer.input_dim(), layer.hidden_dim()));
  out.head.w = Eigen::RowVectorXd::Zero(net.head.w.size());
  return out;
}

enum class HeadInit { zero, uniform };

/// Weights uniform in +-1/sqrt(hidden + input) per layer, forget-gate bias 1,
/// other biases 0. The head is either zero or uniform in +-1/sqrt(hidden).
[[nodiscard]] inline LstmNetwork init_network(std::size_t input_dim, std::size_t hidden_dim,
                                              std::size_t layers, std::uint64_t seed,
                                              HeadInit head = HeadInit::uniform) {
  if (input_dim == 0 || hidden_dim == 0 || layers == 0)
    throw ConfigurationError("init_network: dimensions must be positive");
  std::mt19937_64 rng(seed);
  LstmNetwork net;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    auto p = LstmCellParams::zeros(in, hidden_dim);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim + in));
    std::uniform_real_distribution<double> u(-k, k);
    for (auto& w : p.W)
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    p.b[kForget].setOnes();
    net.layers.push_back(std::move(p));
    in = hidden_dim;
  }
  net.head.w = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(hidden_dim));
  if (head == HeadInit::uniform) {
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    std::uniform_real_distribution<double> u(-k, k);
    for (Eigen::Index i = 0; i < net.head.w.size(); ++i) net.head.w(i) = u(rng);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace detail {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

/// tanh through the vectorised exponential; Eigen's double tanh is scalar.
/// Agrees with std::tanh to a few ulp of 1.
template <class Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& z) {
  return 2.0 / (1.0 + (-2.0 * z).exp()) - 1.0;
}

}  // namespace detail

/// One LSTM step:
///   f = sigma(W_f [h, x] + b_f),  i = sigma(W_i [h, x] + b_i)
///   c~ = tanh(W_c [h, x] + b_c),  o = sigma(W_o [h, x] + b_o)
///   c' = f * c + i * c~,          h' = o * tanh(c')
[[nodiscard]] inline CellActivations cell_step(const LstmCellParams& params,
                                               const Eigen::VectorXd& x, const LstmState& prev) {
  const auto h = static_cast<Eigen::Index>(params.hidden_dim());
  const auto in = static_cast<Eigen::Index>(params.input_dim());
  if (x.size() != in || prev.h.size() != h || prev.c.size() != h)
    throw ConfigurationError("cell_step: input/state shape mismatch");

  Eigen::VectorXd a(h + in);
  a << prev.h, x;
  CellActivations out;
  out.f = detail::sigmoid((params.W[kForget] * a + params.b[kForget]).array()).matrix();
  out.i = detail::sigmoid((params.W[kInput] * a + params.b[kInput]).array()).matrix();
  out.c_tilde = (params.W[kCandidate] * a + params.b[kCandidate]).array().tanh().matrix();
  out.o = detail::sigmoid((params.W[kOutput] * a + params.b[kOutput]).array()).matrix();
  out.state.c = (out.f.array() * prev.c.array() + out.i.array() * out.c_tilde.array()).matrix();
  out.state.h = (out.o.array() * out.state.c.array().tanh()).matrix();
  if (!out.state.c.allFinite() || !out.state.h.allFinite())
    throw NumericalError("cell_step: non-finite state");
  return out;
}

[[nodiscard]] inline LstmState cell_forward(const LstmCellParams& params, const Eigen::VectorXd& x,
                                            const LstmState& prev) {
  return cell_step(params, x, prev).state;
}

namespace detail {

/// The four gate blocks stacked row-wise and split into the recurrent (h)
/// and input (x) column groups.
struct StackedCell {
  Eigen::MatrixXd Wh;  // 4H x H
  Eigen::MatrixXd Wx;  // 4H x I
  Eigen::VectorXd b;   // 4H
};

inline StackedCell stack(const LstmCellParams& p) {
  const auto H = static_cast<Eigen::Index>(p.hidden_dim());
  const auto I = static_cast<Eigen::Index>(p.input_dim());
  StackedCell s{Eigen::MatrixXd(4 * H, H), Eigen::MatrixXd(4 * H, I), Eigen::VectorXd(4 * H)};
  for (std::size_t g = 0; g < 4; ++g) {
    const auto r = static_cast<Eigen::Index>(g) * H;
    s.Wh.middleRows(r, H) = p.W[g].leftCols(H);
    s.Wx.middleRows(r, H) = p.W[g].rightCols(I);
    s.b.segment(r, H) = p.b[g];
  }
  return s;
}

/// Activations of one layer over a whole batch of sequences. Sequence
/// matrices hold time step t in columns [t*B, (t+1)*B).
struct LayerTrace {
  Eigen::MatrixXd x;       // I x TB, layer input
  Eigen::ArrayXXd gates;   // 4H x TB, activated f, i, c~, o
  Eigen::ArrayXXd c;       // H x TB
  Eigen::ArrayXXd tanh_c;  // H x TB
  Eigen::MatrixXd h;       // H x TB, layer output
};

/// Runs the stack over a batch. `windows` is batch x m for scalar inputs.
/// Returns predictions; fills traces when given.
inline Eigen::VectorXd forward_batch_impl(const LstmNetwork& net, const Eigen::MatrixXd& windows,
                                          std::vector<LayerTrace>* traces) {
  const Eigen::Index B = windows.rows();
  const Eigen::Index T = windows.cols();
  if (net.input_dim() != 1) throw ConfigurationError("forward: only scalar inputs are supported");
  if (T == 0) throw ConfigurationError("forward: empty window");
  if (traces) traces->assign(net.layers.size(), {});

  Eigen::MatrixXd x(1, T * B);
  for (Eigen::Index t = 0; t < T; ++t) x.middleCols(t * B, B) = windows.col(t).transpose();

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const StackedCell cell = stack(net.layers[l]);
    const auto H = static_cast<Eigen::Index>(net.layers[l].hidden_dim());
    Eigen::MatrixXd z_in = cell.Wx * x;
    z_in.colwise() += cell.b;

    Eigen::ArrayXXd gates(4 * H, T * B);
    Eigen::ArrayXXd c_seq(H, T * B);
    Eigen::ArrayXXd tc_seq(H, T * B);
    Eigen::MatrixXd h_seq(H, T * B);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::ArrayXXd c = Eigen::ArrayXXd::Zero(H, B);
    Eigen::MatrixXd z(4 * H, B);

    for (Eigen::Index t = 0; t < T; ++t) {
      z = z_in.middleCols(t * B, B);
      if (t > 0) z.noalias() += cell.Wh * h;
      auto act = gates.middleCols(t * B, B);
      act.topRows(2 * H) = 1.0 / (1.0 + (-z.topRows(2 * H).array()).exp());
      act.middleRows(2 * H, H) = fast_tanh(z.middleRows(2 * H, H).array());
      act.bottomRows(H) = 1.0 / (1.0 + (-z.bottomRows(H).array()).exp());
      c = act.topRows(H) * c + act.middleRows(H, H) * act.middleRows(2 * H, H);
      auto tc = tc_seq.middleCols(t * B, B);
      tc = fast_tanh(c);
      h = (act.bottomRows(H) * tc).matrix();
      c_seq.middleCols(t * B, B) = c;
      h_seq.middleCols(t * B, B) = h;
    }

    if (traces) {
      auto& tr = (*traces)[l];
      tr.x = std::move(x);
      tr.gates = std::move(gates);
      tr.c = std::move(c_seq);
      tr.tanh_c = std::move(tc_seq);
      tr.h = h_seq;
    }
    x = std::move(h_seq);
  }

  Eigen::VectorXd pred = (net.head.w * x.middleCols((T - 1) * B, B)).transpose();
  pred.array() += net.head.b;
  if (!pred.allFinite()) throw NumericalError("forward: non-finite prediction");
  return pred;
}

}  // namespace detail

/// Predictions for every row of `windows` (batch x m), zero initial states.
[[nodiscard]] inline Eigen::VectorXd forward_batch(const LstmNetwork& net,
                                                   const Eigen::MatrixXd& windows) {
  return detail::forward_batch_impl(net, windows, nullptr);
}

/// Prediction for a single window (oldest first).
[[nodiscard]] inline double forward(const LstmNetwork& net, std::span<const double> window) {
  Eigen::MatrixXd w(1, static_cast<Eigen::Index>(window.size()));
  for (std::size_t t = 0; t < window.size(); ++t) w(0, static_cast<Eigen::Index>(t)) = window[t];
  return forward_batch(net, w)(0);
}

// ---------------------------------------------------------------------------
// Backpropagation through time

struct BatchGradient {
  LstmGradients grad;
  double loss = 0.0;  ///< mean squared error over the batch
};

/// Exact gradient of the batch MSE with respect to every parameter,
/// backpropagated through the full window.
[[nodiscard]] inline BatchGradient bptt_gradients(const LstmNetwork& net,
                                                  const Eigen::MatrixXd& windows,
                                                  const Eigen::VectorXd& targets) {
  if (windows.rows() == 0) throw ConfigurationError("bptt_gradients: empty batch");
  if (targets.size() != windows.rows())
    throw ConfigurationError("bptt_gradients: target count mismatch");

  std::vector<detail::LayerTrace> traces;
  const Eigen::VectorXd pred = detail::forward_batch_impl(net, windows, &traces);
  const Eigen::Index B = windows.rows();
  const Eigen::Index T = windows.cols();
  const Eigen::VectorXd err = pred - targets;

  BatchGradient out;
  out.loss = err.squaredNorm() / static_cast<double>(B);
  out.grad = zeros_like(net);
  auto& grad = out.grad;

  const Eigen::RowVectorXd dpred = (2.0 / static_cast<double>(B)) * err.transpose();
  grad.head.w = dpred * traces.back().h.middleCols((T - 1) * B, B).transpose();
  grad.head.b = dpred.sum();

  // Gradient w.r.t. the current layer's outputs, all time steps.
  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.hidden_dim()), T * B);
  d_out.middleCols((T - 1) * B, B) = net.head.w.transpose() * dpred;

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& tr = traces[l];
    const detail::StackedCell cell = detail::stack(net.layers[l]);
    const auto H = static_cast<Eigen::Index>(net.layers[l].hidden_dim());
    const auto I = static_cast<Eigen::Index>(net.layers[l].input_dim());

    Eigen::MatrixXd dz_seq(4 * H, T * B);
    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
    Eigen::ArrayXXd dc_next = Eigen::ArrayXXd::Zero(H, B);
    Eigen::ArrayXXd dh(H, B);
    Eigen::ArrayXXd dc(H, B);

    for (Eigen::Index t = T; t-- > 0;) {
      const auto act = tr.gates.middleCols(t * B, B);
      const auto f = act.topRows(H);
      const auto in = act.middleRows(H, H);
      const auto g = act.middleRows(2 * H, H);
      const auto o = act.bottomRows(H);
      const auto tc = tr.tanh_c.middleCols(t * B, B);

      dh = d_out.middleCols(t * B, B).array() + dh_next.array();
      dc = dc_next + dh * o * (1.0 - tc.square());

      auto dz = dz_seq.middleCols(t * B, B);
      if (t > 0)
        dz.topRows(H) = (dc * tr.c.middleCols((t - 1) * B, B) * f * (1.0 - f)).matrix();
      else
        dz.topRows(H).setZero();
      dz.middleRows(H, H) = (dc * g * in * (1.0 - in)).matrix();
      dz.middleRows(2 * H, H) = (dc * in * (1.0 - g.square())).matrix();
      dz.bottomRows(H) = (dh * tc * o * (1.0 - o)).matrix();

      dh_next.noalias() = cell.Wh.transpose() * dz;
      dc_next = dc * f;
    }

    const Eigen::MatrixXd dWx = dz_seq * tr.x.transpose();
    Eigen::MatrixXd dWh = Eigen::MatrixXd::Zero(4 * H, H);
    if (T > 1)
      dWh.noalias() = dz_seq.rightCols((T - 1) * B) * tr.h.leftCols((T - 1) * B).transpose();
    const Eigen::VectorXd db = dz_seq.rowwise().sum();
    auto& gl = grad.layers[l];
    for (std::size_t k = 0; k < 4; ++k) {
      const auto r = static_cast<Eigen::Index>(k) * H;
      gl.W[k].leftCols(H) = dWh.middleRows(r, H);
      gl.W[k].rightCols(I) = dWx.middleRows(r, H);
      gl.b[k] = db.segment(r, H);
    }
    if (l > 0) d_out = cell.Wx.transpose() * dz_seq;
  }

  auto names = tensor_names(grad);
  auto ts = tensors(grad);
  for (std::size_t k = 0; k < ts.size(); ++k)
    for (double v : ts[k])
      if (!std::isfinite(v)) throw NumericalError("bptt_gradients: non-finite gradient in " + names[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Supervised windows and training

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::size_t layers = 3;
  std::size_t hidden_dim = 32;
  std::size_t window_m = 20;
  std::uint64_t seed = 42;
  /// With a validation set, return the weights with the lowest validation MSE
  /// (the untrained weights included) instead of the last epoch.
  bool keep_best_validation = true;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.epochs == 0 || cfg.batch_size == 0 || cfg.layers == 0 ||
      cfg.hidden_dim == 0 || cfg.window_m == 0)
    throw ConfigurationError("TrainConfig: every setting must be positive");
}

/// Sliding (window -> next value) pairs in scaled units.
struct SupervisedWindowSet {
  Eigen::MatrixXd inputs;   ///< count x m, oldest first
  Eigen::VectorXd targets;  ///< count
  ScaleParams scale;

  [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(inputs.rows()); }
  [[nodiscard]] std::size_t window() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Windows whose targets are values[first_target..]; by default every target
/// with m predecessors, giving length - m pairs.
[[nodiscard]] inline SupervisedWindowSet make_windows(std::span<const double> values,
                                                      std::size_t m, const ScaleParams& scale,
                                                      std::optional<std::size_t> first_target = {}) {
  if (m == 0) throw ConfigurationError("make_windows: window must be positive");
  if (values.size() <= m)
    throw DegenerateInputError("make_windows: series length " + std::to_string(values.size()) +
                               " must exceed window " + std::to_string(m));
  const std::size_t first = first_target.value_or(m);
  if (first < m || first >= values.size())
    throw ConfigurationError("make_windows: first target out of range");
  const std::vector<double> scaled = minmax_scale(values, scale);
  const std::size_t count = values.size() - first;

  SupervisedWindowSet set;
  set.scale = scale;
  set.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(m));
  set.targets.resize(static_cast<Eigen::Index>(count));
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t target = first + r;
    for (std::size_t j = 0; j < m; ++j)
      set.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = scaled[target - m + j];
    set.targets(static_cast<Eigen::Index>(r)) = scaled[target];
  }
  return set;
}

struct TrainResult {
  LstmNetwork net;
  /// Mean training MSE of each epoch (scaled units).
  std::vector<double> loss_history;
  /// Validation MSE after each epoch, when a validation set was supplied.
  std::vector<double> val_history;
  /// Validation MSE of the untrained network.
  std::optional<double> initial_val_mse;
  /// Epoch whose weights were returned; empty when no epoch beat the untrained
  /// network on validation or no validation set was given.
  std::optional<std::size_t> best_val_epoch;
  double best_val_mse = std::numeric_limits<double>::quiet_NaN();
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Mini-batch Adam on the MSE. Windows are reshuffled each epoch with a
/// generator seeded from cfg.seed; the last batch of an epoch may be short.
/// The returned network holds the last-epoch weights, or the best validation
/// checkpoint when a validation set is given and cfg.keep_best_validation is set.
[[nodiscard]] inline TrainResult train(LstmNetwork net, const SupervisedWindowSet& data,
                                       const TrainConfig& cfg,
                                       const SupervisedWindowSet* validation = nullptr,
                                       const AdamSettings& adam = {}) {
  validate(cfg);
  validate(net);
  if (data.count() == 0) throw ConfigurationError("train: no training windows");
  if (static_cast<Eigen::Index>(data.count()) != data.targets.size())
    throw ConfigurationError("train: inputs/targets mismatch");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.count());
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd params = flatten(net);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.size());
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  TrainResult result;
  result.loss_history.reserve(cfg.epochs);
  const auto m = static_cast<Eigen::Index>(data.window());
  Eigen::MatrixXd batch_in;
  Eigen::VectorXd batch_y;
  Eigen::VectorXd best_params;

  const bool checkpoint = validation && validation->count() > 0;
  auto validation_mse = [&](const LstmNetwork& candidate) {
    const Eigen::VectorXd pred = forward_batch(candidate, validation->inputs);
    return (pred - validation->targets).squaredNorm() / static_cast<double>(validation->count());
  };
  if (checkpoint) {
    result.initial_val_mse = validation_mse(net);
    result.best_val_mse = *result.initial_val_mse;
    if (cfg.keep_best_validation) best_params = params;
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sse = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      batch_in.resize(static_cast<Eigen::Index>(len), m);
      batch_y.resize(static_cast<Eigen::Index>(len));
      for (std::size_t r = 0; r < len; ++r) {
        const auto src = static_cast<Eigen::Index>(order[start + r]);
        batch_in.row(static_cast<Eigen::Index>(r)) = data.inputs.row(src);
        batch_y(static_cast<Eigen::Index>(r)) = data.targets(src);
      }
      auto bg = bptt_gradients(net, batch_in, batch_y);
      epoch_sse += bg.loss * static_cast<double>(len);

      const Eigen::VectorXd g = flatten(bg.grad);
      beta1_t *= adam.beta1;
      beta2_t *= adam.beta2;
      m1 = adam.beta1 * m1 + (1.0 - adam.beta1) * g;
      m2 = adam.beta2 * m2 + (1.0 - adam.beta2) * g.cwiseProduct(g);
      const Eigen::ArrayXd m_hat = m1.array() / (1.0 - beta1_t);
      const Eigen::ArrayXd v_hat = m2.array() / (1.0 - beta2_t);
      params.array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + adam.epsilon);
      unflatten(net, params);
    }
    result.loss_history.push_back(epoch_sse / static_cast<double>(data.count()));

    if (checkpoint) {
      const double val = validation_mse(net);
      result.val_history.push_back(val);
      if (val < result.best_val_mse) {
        result.best_val_epoch = epoch;
        result.best_val_mse = val;
        if (cfg.keep_best_validation) best_params = params;
      }
    }
  }
  if (best_params.size() > 0) unflatten(net, best_params);
  result.net = std::move(net);
  return result;
}

}  // namespace navcast
