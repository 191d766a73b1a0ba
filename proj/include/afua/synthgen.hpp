#pragma once

// Synthetic strain-gauge corpus: chewing segments (quasi-periodic tone
// bursts), speech-like segments (irregular short bursts), ambient noise, and
// sparse cough transients. Class structure is carried by the burst timing
// statistics, which is exactly what the envelope-crossing features respond
// to: chewing produces two envelope band flips per burst at the chew rate,
// speech roughly twice that, and near-silence lets the fast envelope jitter
// chatter through the narrow hysteresis band at a much higher rate.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "afua/common.hpp"
#include "afua/dsp.hpp"

namespace afua::synth {

struct GenConfig {
  double sample_rate = 500.0;
  double chew_rate = 1.5;          // bursts per second
  double chew_rate_jitter = 0.05;  // uniform fractional period jitter
  double burst_freq = 40.0;        // Hz, chew burst carrier
  double burst_decay = 0.040;      // s, burst envelope time scale
  double amplitude = 1.0;
  double noise_floor = 0.02;       // additive Gaussian noise sigma
  double talk_interval = 0.26;     // s, mean spacing of speech bursts
  double talk_interval_cv = 0.60;  // log-normal coefficient of variation
  double talk_freq_lo = 80.0;
  double talk_freq_hi = 200.0;
  double cough_spacing = 10.0;     // s, +-20% uniform
  double segment_length = 120.0;   // s
  std::uint64_t seed = 1;
};

namespace detail {

// attack-decay envelope: (u/r) e^(1 - u/r), unit peak at u = r
inline void add_tone_burst(std::vector<double>& s, double fs, double t0, double freq,
                           double decay, double amp) {
  const double span = 8.0 * decay;  // envelope < 1e-2 beyond this
  const long i0 = static_cast<long>(std::ceil(t0 * fs));
  const long i1 = std::min<long>(static_cast<long>(s.size()),
                                 static_cast<long>(std::ceil((t0 + span) * fs)));
  for (long i = std::max<long>(i0, 0); i < i1; ++i) {
    const double u = i / fs - t0;
    const double env = (u / decay) * std::exp(1.0 - u / decay);
    s[i] += amp * env * std::sin(2.0 * std::numbers::pi * freq * u);
  }
}

inline std::vector<double> noise_track(std::size_t count, double sigma,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> s(count);
  for (double& v : s) v = n(rng);
  return s;
}

inline std::size_t sample_count(double duration, double fs) {
  if (duration <= 0.0 || fs <= 0.0) throw std::invalid_argument("bad signal duration or rate");
  return static_cast<std::size_t>(std::llround(duration * fs));
}

}  // namespace detail

// Chewing: bursts at chew_rate with small uniform period jitter. Optionally
// reports the burst onset times for timing-statistics checks.
inline dsp::SignalBuffer gen_chew(double duration, const GenConfig& cfg,
                                  std::mt19937_64& rng,
                                  std::vector<double>* burst_times = nullptr) {
  const std::size_t count = detail::sample_count(duration, cfg.sample_rate);
  std::vector<double> s = detail::noise_track(count, cfg.noise_floor, rng);
  std::uniform_real_distribution<double> jit(-cfg.chew_rate_jitter, cfg.chew_rate_jitter);
  std::uniform_real_distribution<double> amp(0.8, 1.2);
  const double period = 1.0 / cfg.chew_rate;
  double t = 0.3 * period;
  while (t < duration) {
    if (burst_times) burst_times->push_back(t);
    detail::add_tone_burst(s, cfg.sample_rate, t, cfg.burst_freq, cfg.burst_decay,
                           cfg.amplitude * amp(rng));
    t += period * (1.0 + jit(rng));
  }
  return {std::move(s), cfg.sample_rate};
}

// Speech-like interference: short bursts with log-normal spacing (highly
// irregular) and a carrier drawn per burst from the talk band. Spacing is kept
// dense enough that even sparse stretches hold more bursts per crossing frame
// than chewing ever produces; otherwise a lull is indistinguishable from chew
// in both features (the crossing rates are blind to the carrier).
inline dsp::SignalBuffer gen_talk(double duration, const GenConfig& cfg,
                                  std::mt19937_64& rng,
                                  std::vector<double>* burst_times = nullptr) {
  const std::size_t count = detail::sample_count(duration, cfg.sample_rate);
  std::vector<double> s = detail::noise_track(count, cfg.noise_floor, rng);
  const double cv2 = cfg.talk_interval_cv * cfg.talk_interval_cv;
  const double sig = std::sqrt(std::log1p(cv2));
  const double mu = std::log(cfg.talk_interval) - 0.5 * sig * sig;
  std::lognormal_distribution<double> gap(mu, sig);
  std::uniform_real_distribution<double> freq(cfg.talk_freq_lo, cfg.talk_freq_hi);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  double t = gap(rng);
  while (t < duration) {
    if (burst_times) burst_times->push_back(t);
    detail::add_tone_burst(s, cfg.sample_rate, t, freq(rng), 0.020,
                           cfg.amplitude * amp(rng));
    t += gap(rng);
  }
  return {std::move(s), cfg.sample_rate};
}

// Sensor noise only.
inline dsp::SignalBuffer gen_silence(double duration, const GenConfig& cfg,
                                     std::mt19937_64& rng) {
  return {detail::noise_track(detail::sample_count(duration, cfg.sample_rate),
                              cfg.noise_floor, rng),
          cfg.sample_rate};
}

// Sparse high-energy transients roughly cough_spacing apart: at most three
// can land in any 24 s window at the default spacing.
inline dsp::SignalBuffer gen_cough(double duration, const GenConfig& cfg,
                                   std::mt19937_64& rng,
                                   std::vector<double>* burst_times = nullptr) {
  const std::size_t count = detail::sample_count(duration, cfg.sample_rate);
  std::vector<double> s = detail::noise_track(count, cfg.noise_floor, rng);
  std::uniform_real_distribution<double> jit(0.8, 1.2);
  std::uniform_real_distribution<double> start(0.2, 0.8);
  double t = start(rng) * cfg.cough_spacing;
  while (t < duration) {
    if (burst_times) burst_times->push_back(t);
    detail::add_tone_burst(s, cfg.sample_rate, t, 30.0, 0.12, 2.0 * cfg.amplitude);
    t += cfg.cough_spacing * jit(rng);
  }
  return {std::move(s), cfg.sample_rate};
}

inline dsp::SignalBuffer gen_segment(const std::string& kind, double duration,
                                     const GenConfig& cfg, std::mt19937_64& rng) {
  if (kind == "chew") return gen_chew(duration, cfg, rng);
  if (kind == "talk") return gen_talk(duration, cfg, rng);
  if (kind == "silence") return gen_silence(duration, cfg, rng);
  if (kind == "cough") return gen_cough(duration, cfg, rng);
  throw std::invalid_argument("gen_segment: unknown segment kind '" + kind + "'");
}

struct Dataset {
  dsp::SignalBuffer signal;
  std::vector<dsp::Segment> manifest;
};

// Alternates chewing segments with a rotating cast of interference segments.
// Each segment draws from its own seed stream, so a given (seed, segment
// index) pair always produces identical samples regardless of total length.
inline Dataset build_dataset(double total_duration, const GenConfig& cfg) {
  if (total_duration < 2.0 * cfg.segment_length) {
    throw std::invalid_argument("build_dataset: need at least two segments");
  }
  static const char* rotation[] = {"talk", "silence", "talk", "silence", "cough"};
  Dataset d;
  d.signal.sample_rate = cfg.sample_rate;
  const int n_segments = static_cast<int>(total_duration / cfg.segment_length);
  int nonchew = 0;
  for (int i = 0; i < n_segments; ++i) {
    const std::string kind = i % 2 == 0 ? "chew" : rotation[nonchew++ % 5];
    std::mt19937_64 rng(derive_seed(cfg.seed, 100 + i));
    dsp::SignalBuffer seg = gen_segment(kind, cfg.segment_length, cfg, rng);
    const double t0 = static_cast<double>(d.signal.samples.size()) / cfg.sample_rate;
    d.signal.samples.insert(d.signal.samples.end(), seg.samples.begin(), seg.samples.end());
    d.manifest.push_back({t0, t0 + cfg.segment_length, kind});
  }
  return d;
}

}  // namespace afua::synth
