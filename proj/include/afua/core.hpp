#pragma once

// Cell mathematics for the AFUA gated recurrent unit: the saturating
// activation, gate evaluation, the discrete per-frame update, and continuous
// integration of the underlying filter ODE. A classical GRU forward pass is
// included as a reference for the gate-inversion equivalence.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "afua/common.hpp"

namespace afua::core {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// f(y) = max(y,0)^2 / (1 + max(y,0)^2), range [0, 1).
// For y > 1 evaluated as 1 / (1 + y^-2) so y^2 cannot overflow.
inline double activation(double y) {
  if (y <= 0.0) return 0.0;
  if (y <= 1.0) {
    const double y2 = y * y;
    return y2 / (1.0 + y2);
  }
  const double inv = 1.0 / y;
  return 1.0 / (1.0 + inv * inv);
}

// df/dy = 2*max(y,0) / (1 + max(y,0)^2)^2, with subgradient 0 at y <= 0.
inline double activation_deriv(double y) {
  if (y <= 0.0) return 0.0;
  if (y <= 1.0) {
    const double d = 1.0 + y * y;
    return 2.0 * y / (d * d);
  }
  const double inv = 1.0 / y;  // 2y/(1+y^2)^2 == 2*y^-3/(1+y^-2)^2
  const double d = 1.0 + inv * inv;
  return 2.0 * inv * inv * inv / (d * d);
}

// The six learned tensors. Hidden state has `units` components in (0, 2);
// the resting value (and the reference subtracted from h on the recurrent
// path) is 1.
struct ModelParams {
  Mat W, Wz;  // units x inputs
  Mat U, Uz;  // units x units
  Vec b, bz;  // units

  Eigen::Index units() const { return W.rows(); }
  Eigen::Index inputs() const { return W.cols(); }

  static ModelParams zeros(Eigen::Index units, Eigen::Index inputs) {
    ModelParams p;
    p.W = Mat::Zero(units, inputs);
    p.Wz = Mat::Zero(units, inputs);
    p.U = Mat::Zero(units, units);
    p.Uz = Mat::Zero(units, units);
    p.b = Vec::Zero(units);
    p.bz = Vec::Zero(units);
    return p;
  }

  void check_shapes() const {
    const Eigen::Index m = W.rows(), n = W.cols();
    if (Wz.rows() != m || Wz.cols() != n || U.rows() != m || U.cols() != m ||
        Uz.rows() != m || Uz.cols() != m || b.size() != m || bz.size() != m) {
      throw std::invalid_argument("ModelParams: inconsistent tensor shapes");
    }
  }
};

inline Vec initial_state(Eigen::Index units) { return Vec::Constant(units, 1.0); }

// Optional per-unit multipliers on the two activation outputs. Calibration
// hook for matching a specific physical instance; disabled (all ones) when
// the vectors are empty.
struct CellGains {
  Vec gate;       // scales z
  Vec candidate;  // scales h~
  bool enabled() const { return gate.size() > 0 || candidate.size() > 0; }
};

struct GateValues {
  Vec z;     // update gate, each in [0, 1)
  Vec cand;  // candidate state h~, each in [0, 1)
};

inline void check_step_args(const ModelParams& p, const Vec& x, const Vec& h) {
  if (x.size() != p.inputs() || h.size() != p.units()) {
    std::ostringstream os;
    os << "cell: expected input size " << p.inputs() << " and state size "
       << p.units() << ", got " << x.size() << " and " << h.size();
    throw std::invalid_argument(os.str());
  }
}

// z = f(Wz x + Uz (h - 1) + bz), h~ = f(W x + U (h - 1) + b).
inline GateValues gates(const ModelParams& p, const Vec& x, const Vec& h,
                        const CellGains* gains = nullptr) {
  check_step_args(p, x, h);
  const Vec d = h.array() - 1.0;
  GateValues g;
  g.z = p.Wz * x + p.Uz * d + p.bz;
  g.cand = p.W * x + p.U * d + p.b;
  for (Eigen::Index j = 0; j < p.units(); ++j) {
    g.z[j] = activation(g.z[j]);
    g.cand[j] = activation(g.cand[j]);
  }
  if (gains && gains->enabled()) {
    if (gains->gate.size()) g.z.array() *= gains->gate.array();
    if (gains->candidate.size()) g.cand.array() *= gains->candidate.array();
  }
  return g;
}

// One Euler step of the filter ODE with dt equal to the time constant:
// h' = (1 - z) h + 2 z h~. Keeps h in (0, 2) for z in [0, 1), h~ in [0, 1).
inline Vec apply_gate_update(const Vec& h, const Vec& z, const Vec& cand) {
  return (1.0 - z.array()) * h.array() + 2.0 * z.array() * cand.array();
}

inline Vec step_discrete(const ModelParams& p, const Vec& x, const Vec& h,
                         const CellGains* gains = nullptr) {
  const GateValues g = gates(p, x, h, gains);
  return apply_gate_update(h, g.z, g.cand);
}

enum class Integrator { forward_euler, rk4 };

// dt must resolve the fastest cell rate (z/tau <= 1/tau), hence the dt <=
// tau/20 refusal below. Default dt is tau/100.
struct IntegratorConfig {
  double tau = 1.0;
  double dt = 0.0;  // 0 -> tau/100
  Integrator method = Integrator::rk4;

  double effective_dt() const { return dt > 0.0 ? dt : tau / 100.0; }
};

namespace detail {
inline void cell_rate(const ModelParams& p, const Vec& x, const Vec& h,
                      double tau, const CellGains* gains, Vec& out) {
  const GateValues g = gates(p, x, h, gains);
  out = (g.z.array() / tau) * (2.0 * g.cand.array() - h.array());
}
}  // namespace detail

// Integrates (tau / z_j) dh_j/dt = 2 h~_j - h_j against a piecewise-constant
// input trajectory sampled at `frame_period`. Returns the state at the end of
// each frame, so the result aligns sample-for-sample with the discrete path.
inline std::vector<Vec> integrate_continuous(const ModelParams& p,
                                             const std::vector<Vec>& x_frames,
                                             double frame_period, const Vec& h0,
                                             const IntegratorConfig& cfg,
                                             const CellGains* gains = nullptr) {
  if (frame_period <= 0.0) throw std::invalid_argument("integrate: frame period must be positive");
  if (cfg.tau <= 0.0) throw std::invalid_argument("integrate: tau must be positive");
  const double dt_req = cfg.effective_dt();
  if (dt_req > cfg.tau / 20.0) {
    std::ostringstream os;
    os << "integrate: dt " << dt_req << " too coarse for tau " << cfg.tau
       << " (need dt <= tau/20)";
    throw std::invalid_argument(os.str());
  }
  const int sub = std::max(1, static_cast<int>(std::ceil(frame_period / dt_req - 1e-12)));
  const double dt = frame_period / sub;

  std::vector<Vec> out;
  out.reserve(x_frames.size());
  Vec h = h0;
  Vec k1(h.size()), k2(h.size()), k3(h.size()), k4(h.size()), tmp(h.size());
  for (const Vec& x : x_frames) {
    check_step_args(p, x, h);
    for (int s = 0; s < sub; ++s) {
      if (cfg.method == Integrator::forward_euler) {
        detail::cell_rate(p, x, h, cfg.tau, gains, k1);
        h += dt * k1;
      } else {
        detail::cell_rate(p, x, h, cfg.tau, gains, k1);
        tmp = h + 0.5 * dt * k1;
        detail::cell_rate(p, x, tmp, cfg.tau, gains, k2);
        tmp = h + 0.5 * dt * k2;
        detail::cell_rate(p, x, tmp, cfg.tau, gains, k3);
        tmp = h + dt * k3;
        detail::cell_rate(p, x, tmp, cfg.tau, gains, k4);
        h += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    out.push_back(h);
  }
  return out;
}

// ---- reference GRU (sigmoid/tanh, reset gate), used as an oracle ----

struct GruParams {
  Mat Wr, Wz, W;  // units x inputs
  Mat Ur, Uz, U;  // units x units

  Eigen::Index units() const { return W.rows(); }
  Eigen::Index inputs() const { return W.cols(); }
};

// Returns (sigma(y), sigma(-y)) computed from a single exp so the pair swaps
// bit-exactly under y -> -y. The update below uses both halves, which is what
// makes the gate-inversion transform an exact reparameterization in floating
// point, not just in real arithmetic.
inline std::pair<double, double> sigmoid_pair(double y) {
  const double t = std::exp(-std::abs(y));
  const double p = 1.0 / (1.0 + t);
  const double q = t / (1.0 + t);
  return y >= 0.0 ? std::pair<double, double>{p, q} : std::pair<double, double>{q, p};
}

// Classical GRU step:
//   r = sigma(Wr x + Ur h), z = sigma(Wz x + Uz h)
//   h~ = tanh(W x + U (r .* h))
//   h' = z .* h + (1 - z) .* h~
// With inverted_update_gate the retain/blend roles swap, i.e. the update reads
// h' = (1 - z) h + z h~; negating Wz and Uz at the same time leaves the output
// unchanged.
inline Vec gru_step(const GruParams& p, const Vec& x, const Vec& h,
                    bool inverted_update_gate = false) {
  const Vec ar = p.Wr * x + p.Ur * h;
  const Vec az = p.Wz * x + p.Uz * h;
  Vec r(h.size());
  for (Eigen::Index j = 0; j < h.size(); ++j) r[j] = sigmoid_pair(ar[j]).first;
  const Vec ac = p.W * x + p.U * (r.array() * h.array()).matrix();
  Vec out(h.size());
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    const auto [zp, zn] = sigmoid_pair(az[j]);
    const double retain = inverted_update_gate ? zn : zp;
    const double blend = inverted_update_gate ? zp : zn;
    out[j] = retain * h[j] + blend * std::tanh(ac[j]);
  }
  return out;
}

inline Vec gru_reference(const GruParams& p, const std::vector<Vec>& xs, Vec h,
                         bool inverted_update_gate = false) {
  for (const Vec& x : xs) h = gru_step(p, x, h, inverted_update_gate);
  return h;
}

}  // namespace afua::core
