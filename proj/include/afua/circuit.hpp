#pragma once

// Behavioral model of the current-mode implementation: the dimensionalized
// forward pass (saturating current activation + translinear first-order
// filter), per-block current-consumption accounting against the closed-form
// worst case, unit-current sizing, mismatch Monte Carlo over supply and
// temperature corners, and system-level power roll-ups.
//
// Supply and temperature move the wall-clock time constant (through U_T) and
// the power numbers, not the dimensionless trajectory: the input frame period
// is taken as synchronized to the chip time constant, as in a
// faster-than-real-time measurement setup. Mismatch gains are what perturb
// classification.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "afua/common.hpp"
#include "afua/core.hpp"
#include "afua/dsp.hpp"
#include "afua/netsim.hpp"

namespace afua::circuit {

using core::Mat;
using core::Vec;

constexpr double k_boltzmann = 1.380649e-23;  // J/K
constexpr double q_electron = 1.602176634e-19;  // C

struct CircuitConfig {
  double I_unit = 10e-9;       // A
  double C_z = 57e-15;         // F
  double kappa = 0.42;         // subthreshold slope factor
  double temperature = 300.0;  // K
  double V_dd = 1.8;           // V

  double U_T() const { return k_boltzmann * temperature / q_electron; }
  double tau_nominal() const { return C_z * U_T() / (kappa * I_unit); }
};

// Inverts tau = C_z U_T / (kappa I_unit) for the unit current.
inline double unit_current_for_tau(double tau, const CircuitConfig& cfg) {
  if (tau <= 0.0) throw std::invalid_argument("unit_current_for_tau: tau must be positive");
  return cfg.C_z * cfg.U_T() / (cfg.kappa * tau);
}

// Saturating current transfer; equals I_unit * activation(I_in / I_unit).
inline double current_activation(double I_in, double I_unit) {
  if (I_unit <= 0.0) throw std::invalid_argument("current_activation: bad unit current");
  return I_unit * core::activation(I_in / I_unit);
}

// Zero-order-hold update of (C_z U_T / (kappa I_unit)) (I_unit / I_z) dI_h/dt
// = 2 I_cand - I_h over dt, i.e. relaxation toward 2 I_cand with
// tau_eff = C_z U_T / (kappa I_z). Exact for inputs held constant; I_z = 0
// freezes the state.
inline double translinear_filter_step(double I_h, double I_cand, double I_z,
                                      double dt, const CircuitConfig& cfg) {
  if (dt < 0.0) throw std::invalid_argument("translinear_filter_step: negative dt");
  if (I_z <= 0.0) return I_h;  // no gate current, no charge moves
  const double rate = cfg.kappa * I_z / (cfg.C_z * cfg.U_T());
  const double target = 2.0 * I_cand;
  return target + (I_h - target) * std::exp(-rate * dt);
}

// Closed-form worst case, in multiples of I_unit:
//   core = m (14 + 6 (n + 2m)), somas = 4m + 2n + 2.
// Derived from per-block maxima: 2 per activation tail, 6 per update filter,
// per-column VMM 3(n + 2m + 1) across 2m columns, soma rows 2 (input, bias)
// and 4 (state).
struct WorstCaseCurrent {
  double core_units = 0.0;
  double soma_units = 0.0;
  double total_units = 0.0;
  double soma_overhead = 0.0;  // somas / total
};

inline WorstCaseCurrent worst_case_current(int m, int n) {
  if (m < 1 || n < 0) throw std::invalid_argument("worst_case_current: bad dimensions");
  WorstCaseCurrent w;
  w.core_units = m * (14.0 + 6.0 * (n + 2.0 * m));
  w.soma_units = 4.0 * m + 2.0 * n + 2.0;
  w.total_units = w.core_units + w.soma_units;
  w.soma_overhead = w.soma_units / w.total_units;
  return w;
}

struct MismatchConfig {
  double sigma = 0.05;  // log-normal gain spread per mirror instance
  double vdd_min = 1.6, vdd_max = 2.0;
  double temp_min = 273.15, temp_max = 308.15;
};

// Multiplicative gain per mirror instance. Layout of the VMM gain matrices:
// row j covers unit j's column; entries 0..n-1 weight the input rows, n..n+m-1
// the state rows, n+m the bias row.
struct MismatchSample {
  Mat vmm_z, vmm_cand;  // units x (inputs + units + 1)
  Vec soma_input;       // inputs
  Vec soma_state;       // units
  double soma_bias = 1.0;
  Vec act_z, act_cand;      // units: activation tail sources
  Vec filt_target, filt_rate;  // units: candidate mirror, I_z rate branch
  double vdd = 1.8;
  double temperature = 300.0;
};

inline MismatchSample nominal_mismatch(Eigen::Index m, Eigen::Index n,
                                       const CircuitConfig& cfg) {
  MismatchSample s;
  s.vmm_z = Mat::Ones(m, n + m + 1);
  s.vmm_cand = Mat::Ones(m, n + m + 1);
  s.soma_input = Vec::Ones(n);
  s.soma_state = Vec::Ones(m);
  s.act_z = Vec::Ones(m);
  s.act_cand = Vec::Ones(m);
  s.filt_target = Vec::Ones(m);
  s.filt_rate = Vec::Ones(m);
  s.vdd = cfg.V_dd;
  s.temperature = cfg.temperature;
  return s;
}

// sigma = 0 keeps every gain at exactly 1 (no perturbed arithmetic at all).
// corner_index 0..3 pins the supply/temperature extremes; pass -1 to sample
// the corner uniformly.
inline MismatchSample draw_mismatch(Eigen::Index m, Eigen::Index n,
                                    const MismatchConfig& mc, const CircuitConfig& cfg,
                                    std::uint64_t seed, int corner_index = -1) {
  MismatchSample s = nominal_mismatch(m, n, cfg);
  std::mt19937_64 rng(seed);
  if (mc.sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gain = [&]() { return std::exp(mc.sigma * normal(rng)); };
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n + m + 1; ++i) s.vmm_z(j, i) = gain();
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n + m + 1; ++i) s.vmm_cand(j, i) = gain();
    for (Eigen::Index i = 0; i < n; ++i) s.soma_input[i] = gain();
    for (Eigen::Index j = 0; j < m; ++j) s.soma_state[j] = gain();
    s.soma_bias = gain();
    for (Eigen::Index j = 0; j < m; ++j) s.act_z[j] = gain();
    for (Eigen::Index j = 0; j < m; ++j) s.act_cand[j] = gain();
    for (Eigen::Index j = 0; j < m; ++j) s.filt_target[j] = gain();
    for (Eigen::Index j = 0; j < m; ++j) s.filt_rate[j] = gain();
  }
  switch (corner_index) {
    case 0: s.vdd = mc.vdd_min; s.temperature = mc.temp_min; break;
    case 1: s.vdd = mc.vdd_min; s.temperature = mc.temp_max; break;
    case 2: s.vdd = mc.vdd_max; s.temperature = mc.temp_min; break;
    case 3: s.vdd = mc.vdd_max; s.temperature = mc.temp_max; break;
    default: {
      std::uniform_real_distribution<double> uv(mc.vdd_min, mc.vdd_max);
      std::uniform_real_distribution<double> ut(mc.temp_min, mc.temp_max);
      s.vdd = uv(rng);
      s.temperature = ut(rng);
    }
  }
  return s;
}

struct BlockCurrents {
  double activation = 0.0;  // I_unit multiples
  double filter = 0.0;
  double soma = 0.0;
  double vmm = 0.0;
  double total() const { return activation + filter + soma + vmm; }
};

struct PowerReport {
  BlockCurrents mean;               // averaged over all substeps
  BlockCurrents worst;              // per-block maxima (not simultaneous)
  double worst_total_units = 0.0;   // max instantaneous total
  double eq_bound_units = 0.0;      // nominal closed-form worst case
  double mean_total_units = 0.0;
  double mean_power_watts = 0.0;    // mean_total * I_unit * V_dd
  long nominal_bound_exceedances = 0;
  std::vector<std::pair<double, double>> scatter;  // per pattern: (vmm, total)
};

// Dimensionalized network simulation. Weights come from the quantized
// register file; inputs are clamped to the buffer full scale [0, 1] x I_unit.
class AnalogNetwork {
 public:
  AnalogNetwork(const net::QuantizedParams& q, const CircuitConfig& cfg,
                const MismatchSample& mm, int substeps_per_frame = 100)
      : q_(q), cfg_(cfg), mm_(mm), sub_(substeps_per_frame) {
    if (sub_ < 20) throw std::invalid_argument("AnalogNetwork: need >= 20 substeps per frame");
    m_ = q.units();
    n_ = q.inputs();
    if (mm.vmm_z.rows() != m_ || mm.vmm_z.cols() != n_ + m_ + 1) {
      throw std::invalid_argument("AnalogNetwork: mismatch sample shape");
    }
    sample_bound_ = sample_worst_case();
    nominal_bound_ = worst_case_current(static_cast<int>(m_), static_cast<int>(n_)).total_units;
  }

  // Worst possible instantaneous total for THIS instance (its weights and
  // gains), used as the hard internal assertion. Reduces to the closed-form
  // bound with all weight bits on and unit gains.
  double sample_worst_case() const {
    double act = 0.0, filt = 0.0, soma = 0.0, vmm = 0.0;
    Vec h_max(m_);
    for (Eigen::Index j = 0; j < m_; ++j) {
      h_max[j] = std::max(1.0, 2.0 * mm_.filt_target[j] * mm_.act_cand[j]);
      act += mm_.act_z[j] + mm_.act_cand[j];
      filt += 2.0 * mm_.filt_target[j] * mm_.act_cand[j] + 2.0 * mm_.act_z[j] + h_max[j];
    }
    for (Eigen::Index i = 0; i < n_; ++i) soma += 2.0 * mm_.soma_input[i];
    for (Eigen::Index j = 0; j < m_; ++j) soma += 2.0 * mm_.soma_state[j] * h_max[j];
    soma += 2.0 * mm_.soma_bias;
    for (Eigen::Index j = 0; j < m_; ++j) {
      for (Eigen::Index i = 0; i < n_; ++i) {
        vmm += std::abs(q_.Wz(j, i)) * mm_.vmm_z(j, i) * mm_.soma_input[i];
        vmm += std::abs(q_.W(j, i)) * mm_.vmm_cand(j, i) * mm_.soma_input[i];
      }
      for (Eigen::Index k = 0; k < m_; ++k) {
        vmm += std::abs(q_.Uz(j, k)) * mm_.vmm_z(j, n_ + k) * mm_.soma_state[k] * h_max[k];
        vmm += std::abs(q_.U(j, k)) * mm_.vmm_cand(j, n_ + k) * mm_.soma_state[k] * h_max[k];
      }
      vmm += std::abs(q_.bz[j]) * mm_.vmm_z(j, n_ + m_) * mm_.soma_bias;
      vmm += std::abs(q_.b[j]) * mm_.vmm_cand(j, n_ + m_) * mm_.soma_bias;
    }
    return act + filt + soma + vmm;
  }

  // Runs one window of feature frames with the frame period locked to the
  // nominal time constant. Returns the dimensionless state (I_h / I_unit) at
  // the end of each frame. Accumulates consumption statistics into `report`
  // when given; `trace` collects per-frame mean block currents.
  std::vector<Vec> run_window(const dsp::WindowSample& w, PowerReport* report = nullptr,
                              std::vector<BlockCurrents>* trace = nullptr) {
    if (w.frames.empty()) throw std::invalid_argument("AnalogNetwork: empty window");
    const double I_unit = cfg_.I_unit;
    Vec I_h = Vec::Constant(m_, I_unit);  // resting state h = 1
    Vec row_in(n_), pre_z(m_), pre_c(m_), I_z(m_), I_c(m_);
    std::vector<Vec> out;
    out.reserve(w.frames.size());

    for (const dsp::FeatureFrame& f : w.frames) {
      const double xv[2] = {f.x0, f.x1};
      for (Eigen::Index i = 0; i < n_; ++i) {
        const double x = std::clamp(i < 2 ? xv[i] : 0.0, 0.0, 1.0);
        row_in[i] = mm_.soma_input[i] * x * I_unit;
      }
      const double row_bias = mm_.soma_bias * I_unit;
      BlockCurrents frame_sum;

      for (int s = 0; s < sub_; ++s) {
        for (Eigen::Index j = 0; j < m_; ++j) {
          double az = q_.bz[j] * mm_.vmm_z(j, n_ + m_) * row_bias;
          double acand = q_.b[j] * mm_.vmm_cand(j, n_ + m_) * row_bias;
          for (Eigen::Index i = 0; i < n_; ++i) {
            az += q_.Wz(j, i) * mm_.vmm_z(j, i) * row_in[i];
            acand += q_.W(j, i) * mm_.vmm_cand(j, i) * row_in[i];
          }
          for (Eigen::Index k = 0; k < m_; ++k) {
            const double row_state = mm_.soma_state[k] * (I_h[k] - I_unit);
            az += q_.Uz(j, k) * mm_.vmm_z(j, n_ + k) * row_state;
            acand += q_.U(j, k) * mm_.vmm_cand(j, n_ + k) * row_state;
          }
          pre_z[j] = az;
          pre_c[j] = acand;
          I_z[j] = current_activation(az, mm_.act_z[j] * I_unit);
          I_c[j] = current_activation(acand, mm_.act_cand[j] * I_unit);
        }

        // dimensionless substep: dt = tau_nominal / sub, so the exp argument
        // is (gain * I_z / I_unit) / sub and U_T cancels
        for (Eigen::Index j = 0; j < m_; ++j) {
          const double target = 2.0 * mm_.filt_target[j] * I_c[j];
          const double rate_units = mm_.filt_rate[j] * I_z[j] / I_unit;
          I_h[j] = target + (I_h[j] - target) * std::exp(-rate_units / sub_);
        }

        if (report || trace) {
          const BlockCurrents inst = account(row_in, row_bias, I_h, I_z, I_c);
          frame_sum.activation += inst.activation;
          frame_sum.filter += inst.filter;
          frame_sum.soma += inst.soma;
          frame_sum.vmm += inst.vmm;
          if (report) record(*report, inst);
        }
      }

      if (trace) {
        trace->push_back({frame_sum.activation / sub_, frame_sum.filter / sub_,
                          frame_sum.soma / sub_, frame_sum.vmm / sub_});
      }
      out.push_back(I_h / I_unit);
    }
    return out;
  }

  double nominal_bound_units() const { return nominal_bound_; }
  double sample_bound_units() const { return sample_bound_; }

 private:
  BlockCurrents account(const Vec& row_in, double row_bias, const Vec& I_h,
                        const Vec& I_z, const Vec& I_c) const {
    const double I_unit = cfg_.I_unit;
    BlockCurrents b;
    for (Eigen::Index j = 0; j < m_; ++j) {
      b.activation += mm_.act_z[j] + mm_.act_cand[j];
      b.filter += (2.0 * mm_.filt_target[j] * I_c[j] + 2.0 * I_z[j] + I_h[j]) / I_unit;
    }
    for (Eigen::Index i = 0; i < n_; ++i) b.soma += 2.0 * row_in[i] / I_unit;
    for (Eigen::Index j = 0; j < m_; ++j) b.soma += 2.0 * mm_.soma_state[j] * I_h[j] / I_unit;
    b.soma += 2.0 * mm_.soma_bias;
    for (Eigen::Index j = 0; j < m_; ++j) {
      for (Eigen::Index i = 0; i < n_; ++i) {
        b.vmm += (std::abs(q_.Wz(j, i)) * mm_.vmm_z(j, i) +
                  std::abs(q_.W(j, i)) * mm_.vmm_cand(j, i)) * row_in[i] / I_unit;
      }
      for (Eigen::Index k = 0; k < m_; ++k) {
        b.vmm += (std::abs(q_.Uz(j, k)) * mm_.vmm_z(j, n_ + k) +
                  std::abs(q_.U(j, k)) * mm_.vmm_cand(j, n_ + k)) *
                 mm_.soma_state[k] * I_h[k] / I_unit;
      }
      b.vmm += (std::abs(q_.bz[j]) * mm_.vmm_z(j, n_ + m_) +
                std::abs(q_.b[j]) * mm_.vmm_cand(j, n_ + m_)) * row_bias / I_unit;
    }
    return b;
  }

  void record(PowerReport& r, const BlockCurrents& inst) {
    const double total = inst.total();
    if (total > sample_bound_ * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "current accounting exceeded the instance worst case: " << total
         << " > " << sample_bound_ << " I_unit";
      throw InvariantViolation(os.str());
    }
    if (total > nominal_bound_ * (1.0 + 1e-9)) ++r.nominal_bound_exceedances;
    r.mean.activation += inst.activation;
    r.mean.filter += inst.filter;
    r.mean.soma += inst.soma;
    r.mean.vmm += inst.vmm;
    r.worst.activation = std::max(r.worst.activation, inst.activation);
    r.worst.filter = std::max(r.worst.filter, inst.filter);
    r.worst.soma = std::max(r.worst.soma, inst.soma);
    r.worst.vmm = std::max(r.worst.vmm, inst.vmm);
    r.worst_total_units = std::max(r.worst_total_units, total);
    ++samples_;
  }

  friend PowerReport simulate_current_draw(const net::QuantizedParams&,
                                           const std::vector<dsp::WindowSample>&,
                                           const CircuitConfig&, const MismatchSample*,
                                           int);

  net::QuantizedParams q_;
  CircuitConfig cfg_;
  MismatchSample mm_;
  int sub_;
  Eigen::Index m_ = 0, n_ = 0;
  double sample_bound_ = 0.0;
  double nominal_bound_ = 0.0;
  long samples_ = 0;
};

// Runs the stream and aggregates consumption. The hard bound assertion fires
// inside (InvariantViolation) if the accounting ever exceeds the instance
// worst case; exceedances of the nominal closed-form bound are counted in the
// report (possible only with mismatch gains above 1).
inline PowerReport simulate_current_draw(const net::QuantizedParams& q,
                                         const std::vector<dsp::WindowSample>& stream,
                                         const CircuitConfig& cfg,
                                         const MismatchSample* mismatch = nullptr,
                                         int substeps_per_frame = 100) {
  if (stream.empty()) throw std::invalid_argument("simulate_current_draw: empty stream");
  const MismatchSample mm =
      mismatch ? *mismatch : nominal_mismatch(q.units(), q.inputs(), cfg);
  AnalogNetwork netw(q, cfg, mm, substeps_per_frame);
  PowerReport rep;
  rep.eq_bound_units =
      worst_case_current(static_cast<int>(q.units()), static_cast<int>(q.inputs())).total_units;
  for (const dsp::WindowSample& w : stream) {
    std::vector<BlockCurrents> trace;
    netw.run_window(w, &rep, &trace);
    double vmm = 0.0, total = 0.0;
    for (const BlockCurrents& b : trace) {
      vmm += b.vmm;
      total += b.total();
    }
    rep.scatter.emplace_back(vmm / trace.size(), total / trace.size());
  }
  const double inv = 1.0 / netw.samples_;
  rep.mean.activation *= inv;
  rep.mean.filter *= inv;
  rep.mean.soma *= inv;
  rep.mean.vmm *= inv;
  rep.mean_total_units = rep.mean.total();
  rep.mean_power_watts = rep.mean_total_units * cfg.I_unit * mm.vdd;
  return rep;
}

// (ops per step / step period) / (average units drawn * I_unit * V_dd).
inline double ops_per_watt(const CircuitConfig& cfg, double avg_units,
                           double ops_per_step, double step_period) {
  if (avg_units <= 0.0 || step_period <= 0.0) {
    throw std::invalid_argument("ops_per_watt: bad operating point");
  }
  const double power = avg_units * cfg.I_unit * cfg.V_dd;
  return (ops_per_step / step_period) / power;
}

struct SystemPowerInputs {
  double eating_fraction = 0.06;  // fraction of the day spent eating
  double sensitivity = 0.91;      // detector operating point
  double specificity = 0.96;
  double p_feature_W = 0.68e-6;
  double p_network_W = 1.1e-6;
  double p_mcu_active_W = 180e-6;
  double p_mcu_standby_W = 0.72e-6;
};

struct SystemPowerReport {
  double active_fraction = 0.0;  // duty cycle of the downstream processor
  double frontend_W = 0.0;
  double mcu_avg_W = 0.0;
  double total_avg_W = 0.0;
};

// The always-on front end gates the processor: it wakes for true positives
// (eat * sensitivity) and false alarms ((1 - specificity) * (1 - eat)).
inline SystemPowerReport system_power(const SystemPowerInputs& in) {
  SystemPowerReport r;
  r.active_fraction = in.eating_fraction * in.sensitivity +
                      (1.0 - in.specificity) * (1.0 - in.eating_fraction);
  r.frontend_W = in.p_feature_W + in.p_network_W;
  r.mcu_avg_W = in.p_mcu_active_W * r.active_fraction +
                in.p_mcu_standby_W * (1.0 - r.active_fraction);
  r.total_avg_W = r.frontend_W + r.mcu_avg_W;
  return r;
}

struct MonteCarloConfig {
  int n_runs = 250;
  MismatchConfig mismatch;
  std::uint64_t seed = 1;
  int substeps_per_frame = 100;
};

struct MonteCarloResult {
  std::vector<double> accuracies;               // per run, in run order
  std::vector<std::pair<double, double>> corners;  // (V_dd, temperature)
  double median_accuracy = 0.0;
  double nominal_accuracy = 0.0;  // sigma = 0, nominal corner, same evaluator
};

namespace detail {
inline double analog_accuracy(const net::QuantizedParams& q,
                              const std::vector<dsp::WindowSample>& windows,
                              const CircuitConfig& cfg, const MismatchSample& mm,
                              int substeps) {
  AnalogNetwork netw(q, cfg, mm, substeps);
  long correct = 0;
  for (const dsp::WindowSample& w : windows) {
    const Vec h = netw.run_window(w).back();
    const Label predicted = (h[1] - h[0]) >= 0.0 ? Label::chewing : Label::not_chewing;
    if (predicted == w.label) ++correct;
  }
  return static_cast<double>(correct) / windows.size();
}
}  // namespace detail

// The first four runs sit at the supply/temperature extremes; the rest sample
// corners uniformly. Every run draws a fresh mismatch instance.
inline MonteCarloResult monte_carlo(const net::QuantizedParams& q,
                                    const std::vector<dsp::WindowSample>& test_windows,
                                    const MonteCarloConfig& mc, const CircuitConfig& cfg) {
  if (test_windows.empty()) throw std::invalid_argument("monte_carlo: no test windows");
  if (mc.n_runs < 1) throw std::invalid_argument("monte_carlo: need at least one run");
  MonteCarloResult res;
  res.nominal_accuracy = detail::analog_accuracy(
      q, test_windows, cfg, nominal_mismatch(q.units(), q.inputs(), cfg),
      mc.substeps_per_frame);
  res.accuracies.reserve(mc.n_runs);
  for (int run = 0; run < mc.n_runs; ++run) {
    const int corner = run < 4 ? run : -1;
    const MismatchSample mm = draw_mismatch(q.units(), q.inputs(), mc.mismatch, cfg,
                                            derive_seed(mc.seed, run), corner);
    res.corners.emplace_back(mm.vdd, mm.temperature);
    res.accuracies.push_back(
        detail::analog_accuracy(q, test_windows, cfg, mm, mc.substeps_per_frame));
  }
  std::vector<double> sorted = res.accuracies;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  res.median_accuracy = n % 2 == 1 ? sorted[n / 2]
                                   : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return res;
}

}  // namespace afua::circuit
