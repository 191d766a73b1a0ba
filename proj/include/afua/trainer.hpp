#pragma once

// Offline training for the two-unit classifier: weighted binary cross-entropy
// on the final hidden state, backpropagation through the unrolled discrete
// step, Adam with post-step weight clipping, stratified splitting, and a
// finite-difference gradient check.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "afua/common.hpp"
#include "afua/core.hpp"
#include "afua/dsp.hpp"
#include "afua/netsim.hpp"

namespace afua::train {

using core::Mat;
using core::ModelParams;
using core::Vec;

constexpr double kProbEps = 1e-6;  // clamp for p = h/2 before the log

// Targets follow the one-hot state encoding: not-chewing -> h aims at (2, 0),
// chewing -> (0, 2); divided by 2 these are Bernoulli targets per unit.
inline Vec one_hot_target(Label label) {
  Vec t(2);
  if (label == Label::chewing) {
    t << 0.0, 1.0;
  } else {
    t << 1.0, 0.0;
  }
  return t;
}

struct TrainConfig {
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 200;
  int batch_size = 16;
  double w_pos = 1.0;  // loss weight for chewing windows
  double w_neg = 1.0;
  double weight_clip = 3.0;
  std::uint64_t seed = 1;
  std::array<double, 3> split = {0.68, 0.12, 0.20};
  bool normalize_features = true;
  double init_weight_range = 0.5;  // weights ~ U[-range, range]
  double init_bias = 0.5;          // biases start away from the f'(0) = 0 dead zone
  core::CellGains gains;           // per-unit calibration hook; empty = disabled
};

inline double window_weight(Label label, const TrainConfig& cfg) {
  return label == Label::chewing ? cfg.w_pos : cfg.w_neg;
}

// Per-window loss on the final state only.
inline double loss(const Vec& h_final, Label label, const TrainConfig& cfg) {
  if (h_final.size() != 2) throw std::invalid_argument("loss: expects 2 units");
  const Vec t = one_hot_target(label);
  const double w = window_weight(label, cfg);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double p = std::clamp(h_final[j] / 2.0, kProbEps, 1.0 - kProbEps);
    sum -= t[j] * std::log(p) + (1.0 - t[j]) * std::log(1.0 - p);
  }
  return w * sum;
}

inline Vec loss_grad_h(const Vec& h_final, Label label, const TrainConfig& cfg) {
  const Vec t = one_hot_target(label);
  const double w = window_weight(label, cfg);
  Vec g = Vec::Zero(h_final.size());
  for (Eigen::Index j = 0; j < h_final.size(); ++j) {
    const double raw = h_final[j] / 2.0;
    if (raw <= kProbEps || raw >= 1.0 - kProbEps) continue;  // clamped: flat
    g[j] = w * 0.5 * (-t[j] / raw + (1.0 - t[j]) / (1.0 - raw));
  }
  return g;
}

struct Gradients {
  Mat W, Wz, U, Uz;
  Vec b, bz;

  static Gradients zeros(Eigen::Index m, Eigen::Index n) {
    Gradients g;
    g.W = Mat::Zero(m, n);
    g.Wz = Mat::Zero(m, n);
    g.U = Mat::Zero(m, m);
    g.Uz = Mat::Zero(m, m);
    g.b = Vec::Zero(m);
    g.bz = Vec::Zero(m);
    return g;
  }

  void add_scaled(const Gradients& o, double s) {
    W += s * o.W;
    Wz += s * o.Wz;
    U += s * o.U;
    Uz += s * o.Uz;
    b += s * o.b;
    bz += s * o.bz;
  }
};

namespace detail {
inline Mat window_inputs(const dsp::WindowSample& w) {
  Mat x(2, w.frames.size());
  for (std::size_t k = 0; k < w.frames.size(); ++k) {
    x(0, k) = w.frames[k].x0;
    x(1, k) = w.frames[k].x1;
  }
  return x;
}

inline double gain_at(const Vec& g, Eigen::Index j) {
  return g.size() > 0 ? g[j] : 1.0;
}
}  // namespace detail

// Unrolled forward with cached pre-activations, then reverse accumulation.
// Returns the loss; fills `out` with d(loss)/d(params).
inline double bptt_gradients(const ModelParams& p, const dsp::WindowSample& window,
                             const TrainConfig& cfg, Gradients& out) {
  p.check_shapes();
  if (window.frames.empty()) throw std::invalid_argument("bptt: empty window");
  const Eigen::Index m = p.units(), n = p.inputs();
  if (n != 2 || m != 2) throw std::invalid_argument("bptt: expects 2x2 network");
  const Eigen::Index T = static_cast<Eigen::Index>(window.frames.size());
  const Mat xs = detail::window_inputs(window);

  Mat h_prev(m, T), az(m, T), ac(m, T), zs(m, T), cs(m, T);
  Vec h = core::initial_state(m);
  for (Eigen::Index t = 0; t < T; ++t) {
    h_prev.col(t) = h;
    const Vec d = h.array() - 1.0;
    az.col(t).noalias() = p.Wz * xs.col(t);
    az.col(t).noalias() += p.Uz * d;
    az.col(t) += p.bz;
    ac.col(t).noalias() = p.W * xs.col(t);
    ac.col(t).noalias() += p.U * d;
    ac.col(t) += p.b;
    for (Eigen::Index j = 0; j < m; ++j) {
      zs(j, t) = core::activation(az(j, t)) * detail::gain_at(cfg.gains.gate, j);
      cs(j, t) = core::activation(ac(j, t)) * detail::gain_at(cfg.gains.candidate, j);
      h[j] = (1.0 - zs(j, t)) * h[j] + 2.0 * zs(j, t) * cs(j, t);
    }
    if (!h.allFinite()) {
      std::ostringstream os;
      os << "bptt: non-finite state at frame " << t << " (h = " << h.transpose() << ")";
      throw std::runtime_error(os.str());
    }
  }

  const double L = loss(h, window.label, cfg);
  Vec g = loss_grad_h(h, window.label, cfg);

  out = Gradients::zeros(m, n);
  Vec daz(m), dac(m), d(m);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double dz = g[j] * (2.0 * cs(j, t) - h_prev(j, t));
      const double dc = g[j] * 2.0 * zs(j, t);
      daz[j] = dz * detail::gain_at(cfg.gains.gate, j) * core::activation_deriv(az(j, t));
      dac[j] = dc * detail::gain_at(cfg.gains.candidate, j) * core::activation_deriv(ac(j, t));
    }
    d = h_prev.col(t).array() - 1.0;
    out.Wz.noalias() += daz * xs.col(t).transpose();
    out.Uz.noalias() += daz * d.transpose();
    out.bz += daz;
    out.W.noalias() += dac * xs.col(t).transpose();
    out.U.noalias() += dac * d.transpose();
    out.b += dac;
    g = (g.array() * (1.0 - zs.col(t).array())).matrix();
    g.noalias() += p.Uz.transpose() * daz;
    g.noalias() += p.U.transpose() * dac;
  }
  return L;
}

// Forward-only loss through the public cell step; the gradient check differs
// route-wise from the cached forward inside bptt_gradients on purpose.
inline double loss_for_params(const ModelParams& p, const dsp::WindowSample& window,
                              const TrainConfig& cfg) {
  Vec h = core::initial_state(p.units());
  Vec x(2);
  const core::CellGains* gains = cfg.gains.enabled() ? &cfg.gains : nullptr;
  for (const dsp::FeatureFrame& f : window.frames) {
    x[0] = f.x0;
    x[1] = f.x1;
    h = core::step_discrete(p, x, h, gains);
  }
  return loss(h, window.label, cfg);
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_row = 0, worst_col = 0;
  double analytic = 0.0, numeric = 0.0;
  bool passed = false;
};

inline GradCheckReport grad_check(const ModelParams& params, const dsp::WindowSample& window,
                                  const TrainConfig& cfg, double delta = 1e-5,
                                  double tolerance = 1e-4) {
  Gradients g;
  bptt_gradients(params, window, cfg, g);

  GradCheckReport rep;
  ModelParams p = params;
  auto probe = [&](auto& tensor, const auto& analytic, const char* name) {
    for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        const double orig = tensor(r, c);
        tensor(r, c) = orig + delta;
        const double lp = loss_for_params(p, window, cfg);
        tensor(r, c) = orig - delta;
        const double lm = loss_for_params(p, window, cfg);
        tensor(r, c) = orig;
        const double num = (lp - lm) / (2.0 * delta);
        const double ana = analytic(r, c);
        const double rel = std::abs(ana - num) /
                           std::max({std::abs(ana), std::abs(num), 1e-6});
        if (rel > rep.max_rel_error) {
          rep.max_rel_error = rel;
          rep.worst_tensor = name;
          rep.worst_row = r;
          rep.worst_col = c;
          rep.analytic = ana;
          rep.numeric = num;
        }
      }
    }
  };
  probe(p.W, g.W, "W");
  probe(p.Wz, g.Wz, "Wz");
  probe(p.U, g.U, "U");
  probe(p.Uz, g.Uz, "Uz");
  probe(p.b, g.b, "b");
  probe(p.bz, g.bz, "bz");
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

struct SplitIndices {
  std::vector<std::size_t> train, valid, test;
};

// Stratified by class; per-class counts by largest remainder so the split
// fractions hold as closely as integer counts allow. Deterministic in seed.
inline SplitIndices split_stratified(const std::vector<dsp::WindowSample>& windows,
                                     const std::array<double, 3>& fractions,
                                     std::uint64_t seed) {
  const double fsum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(fsum - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }
  SplitIndices out;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (static_cast<int>(windows[i].label) == cls) idx.push_back(i);
    }
    std::mt19937_64 rng(derive_seed(seed, 1000 + cls));
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n = idx.size();
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = fractions[k] * n;
      counts[k] = static_cast<std::size_t>(exact);
      rem[k] = exact - counts[k];
      used += counts[k];
    }
    while (used < n) {
      const int k = static_cast<int>(std::max_element(rem.begin(), rem.end()) - rem.begin());
      ++counts[k];
      rem[k] = -1.0;
      ++used;
    }
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) out.train.push_back(idx[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) out.valid.push_back(idx[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) out.test.push_back(idx[pos++]);
  }
  return out;
}

struct EpochStats {
  double train_loss = 0.0, valid_loss = 0.0;
  double train_acc = 0.0, valid_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string divergence_note;
  double wallclock_seconds = 0.0;  // console-only; never serialized
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  TrainReport report;
  dsp::FeatureScale scale;
  SplitIndices split;
};

namespace detail {
struct AdamState {
  Gradients m, v;
  long step = 0;
};

template <typename T>
void adam_update(T& w, T& m, T& v, const T& g, const TrainConfig& cfg,
                 double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
  w.array() -= cfg.learning_rate * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + cfg.adam_eps);
  w = w.cwiseMax(-cfg.weight_clip).cwiseMin(cfg.weight_clip);
}

inline void apply_adam(ModelParams& p, AdamState& st, const Gradients& g,
                       const TrainConfig& cfg) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, st.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, st.step);
  adam_update(p.W, st.m.W, st.v.W, g.W, cfg, bc1, bc2);
  adam_update(p.Wz, st.m.Wz, st.v.Wz, g.Wz, cfg, bc1, bc2);
  adam_update(p.U, st.m.U, st.v.U, g.U, cfg, bc1, bc2);
  adam_update(p.Uz, st.m.Uz, st.v.Uz, g.Uz, cfg, bc1, bc2);
  adam_update(p.b, st.m.b, st.v.b, g.b, cfg, bc1, bc2);
  adam_update(p.bz, st.m.bz, st.v.bz, g.bz, cfg, bc1, bc2);
}

struct SetStats {
  double mean_loss = 0.0, accuracy = 0.0;
};

inline SetStats evaluate_set(const ModelParams& p, const std::vector<dsp::WindowSample>& set,
                             const std::vector<std::size_t>& idx, const TrainConfig& cfg) {
  SetStats s;
  if (idx.empty()) return s;
  long correct = 0;
  for (std::size_t i : idx) {
    const dsp::WindowSample& w = set[i];
    Vec h = core::initial_state(2);
    Vec x(2);
    const core::CellGains* gains = cfg.gains.enabled() ? &cfg.gains : nullptr;
    for (const dsp::FeatureFrame& f : w.frames) {
      x[0] = f.x0;
      x[1] = f.x1;
      h = core::step_discrete(p, x, h, gains);
    }
    s.mean_loss += loss(h, w.label, cfg);
    const Label predicted = (h[1] - h[0]) >= 0.0 ? Label::chewing : Label::not_chewing;
    if (predicted == w.label) ++correct;
  }
  s.mean_loss /= idx.size();
  s.accuracy = static_cast<double>(correct) / idx.size();
  return s;
}
}  // namespace detail

inline ModelParams init_params(const TrainConfig& cfg, std::mt19937_64& rng) {
  ModelParams p = ModelParams::zeros(2, 2);
  std::uniform_real_distribution<double> u(-cfg.init_weight_range, cfg.init_weight_range);
  auto fill = [&](Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  };
  fill(p.W);
  fill(p.Wz);
  fill(p.U);
  fill(p.Uz);
  p.b.setConstant(cfg.init_bias);
  p.bz.setConstant(cfg.init_bias);
  return p;
}

// Splits, (optionally) fits the feature scale on the training portion, runs
// minibatch Adam, and returns the best-validation checkpoint. On divergence
// (non-finite loss or state) training stops and the last good checkpoint is
// returned with the report flagged.
inline TrainResult train(const std::vector<dsp::WindowSample>& dataset,
                         const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw std::invalid_argument("train: epochs and batch size must be positive");
  }
  const auto t_start = std::chrono::steady_clock::now();

  TrainResult res;
  res.split = split_stratified(dataset, cfg.split, cfg.seed);
  if (res.split.train.empty() || res.split.valid.empty()) {
    throw std::invalid_argument("train: split leaves train or valid set empty");
  }

  std::vector<dsp::WindowSample> windows;
  if (cfg.normalize_features) {
    std::vector<dsp::WindowSample> train_set;
    for (std::size_t i : res.split.train) train_set.push_back(dataset[i]);
    res.scale = dsp::fit_feature_scale(train_set);
    windows.reserve(dataset.size());
    for (const dsp::WindowSample& w : dataset) windows.push_back(dsp::scale_window(w, res.scale));
  } else {
    windows = dataset;
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, 7));
  ModelParams p = init_params(cfg, rng);
  detail::AdamState adam;
  adam.m = Gradients::zeros(2, 2);
  adam.v = Gradients::zeros(2, 2);

  res.params = p;  // fallback checkpoint if epoch 0 already diverges
  Gradients batch_grad = Gradients::zeros(2, 2);
  Gradients window_grad = Gradients::zeros(2, 2);
  std::vector<std::size_t> order = res.split.train;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    try {
      for (std::size_t ofs = 0; ofs < order.size(); ofs += cfg.batch_size) {
        const std::size_t last = std::min(order.size(), ofs + cfg.batch_size);
        batch_grad = Gradients::zeros(2, 2);
        for (std::size_t k = ofs; k < last; ++k) {
          bptt_gradients(p, windows[order[k]], cfg, window_grad);
          batch_grad.add_scaled(window_grad, 1.0 / (last - ofs));
        }
        detail::apply_adam(p, adam, batch_grad, cfg);
      }
    } catch (const std::runtime_error& e) {
      res.report.diverged = true;
      res.report.divergence_note = e.what();
      break;
    }

    const detail::SetStats tr = detail::evaluate_set(p, windows, res.split.train, cfg);
    const detail::SetStats va = detail::evaluate_set(p, windows, res.split.valid, cfg);
    res.report.epochs.push_back({tr.mean_loss, va.mean_loss, tr.accuracy, va.accuracy});
    if (!std::isfinite(tr.mean_loss) || !std::isfinite(va.mean_loss)) {
      res.report.diverged = true;
      res.report.divergence_note = "non-finite epoch loss";
      break;
    }
    if (va.mean_loss < res.report.best_valid_loss) {
      res.report.best_valid_loss = va.mean_loss;
      res.report.best_epoch = epoch;
      res.params = p;
    }
  }

  res.report.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace afua::train
