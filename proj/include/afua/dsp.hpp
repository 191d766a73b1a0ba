#pragma once

// Front-end signal chain: high-pass conditioning, rate conversion, RMS
// envelope, hysteresis zero-crossing rates, and the two-feature extraction
// (envelope periodicity and crossing-rate periodicity) that feeds the
// classifier, plus windowing against an activity timeline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "afua/common.hpp"

namespace afua::dsp {

struct SignalBuffer {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration() const {
    return sample_rate > 0.0 ? samples.size() / sample_rate : 0.0;
  }
};

struct FeatureFrame {
  double t = 0.0;
  double x0 = 0.0;  // envelope crossing rate
  double x1 = 0.0;  // crossing rate of the raw crossing-rate sequence
};

struct WindowSample {
  std::vector<FeatureFrame> frames;  // fixed-duration, uniform rate
  Label label = Label::not_chewing;
};

struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::string kind;  // activity name, e.g. "chew", "talk", "silence", "cough"
};

inline Label segment_label(const Segment& s) {
  return s.kind == "chew" ? Label::chewing : Label::not_chewing;
}

// Second-order Butterworth high-pass (bilinear transform, prewarped), applied
// forward once; causal, so transients settle rather than being zero-phase.
inline SignalBuffer highpass(const SignalBuffer& in, double cutoff_hz) {
  if (in.sample_rate <= 0.0) throw std::invalid_argument("highpass: empty buffer");
  if (cutoff_hz <= 0.0 || cutoff_hz >= in.sample_rate / 2.0) {
    throw std::invalid_argument("highpass: cutoff must lie in (0, Nyquist)");
  }
  const double w0 = 2.0 * M_PI * cutoff_hz / in.sample_rate;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / std::sqrt(2.0);  // Q = 1/sqrt(2)
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 + c) / 2.0 / a0;
  const double b1 = -(1.0 + c) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * c / a0;
  const double a2 = (1.0 - alpha) / a0;

  SignalBuffer out;
  out.sample_rate = in.sample_rate;
  out.samples.resize(in.samples.size());
  double s1 = 0.0, s2 = 0.0;  // direct form II transposed
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    const double x = in.samples[i];
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    out.samples[i] = y;
  }
  return out;
}

// Anti-aliased decimation: windowed-sinc low-pass at 0.45 x target rate, then
// keep every factor-th sample. Only integer factors are supported; equal rates
// pass the buffer through untouched.
inline SignalBuffer resample(const SignalBuffer& in, double target_rate) {
  if (in.sample_rate <= 0.0) throw std::invalid_argument("resample: empty buffer");
  if (target_rate <= 0.0) throw std::invalid_argument("resample: bad target rate");
  if (target_rate > in.sample_rate) {
    throw std::invalid_argument("resample: upsampling not supported");
  }
  if (target_rate == in.sample_rate) return in;
  const double ratio = in.sample_rate / target_rate;
  const int factor = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - factor) > 1e-9) {
    throw std::invalid_argument("resample: rate ratio must be an integer");
  }

  const int half = 8 * factor;  // taps = 16*factor + 1
  const double fc = 0.45 * target_rate / in.sample_rate;  // cycles/sample
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double sinc = k == 0 ? 2.0 * fc
                               : std::sin(2.0 * M_PI * fc * k) / (M_PI * k);
    const double win = 0.54 + 0.46 * std::cos(M_PI * k / half);  // Hamming
    taps[k + half] = sinc * win;
    sum += taps[k + half];
  }
  for (double& t : taps) t /= sum;

  SignalBuffer out;
  out.sample_rate = target_rate;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.samples.size());
  out.samples.reserve(in.samples.size() / factor + 1);
  for (std::ptrdiff_t center = 0; center < n; center += factor) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      const std::ptrdiff_t idx = center + k;
      if (idx >= 0 && idx < n) acc += taps[k + half] * in.samples[idx];
    }
    out.samples.push_back(acc);
  }
  return out;
}

// sqrt of a single-pole low-pass of the squared signal; tau_rms defaults to
// 100 ms at the call sites. State starts at zero (causal from rest).
inline SignalBuffer rms_envelope(const SignalBuffer& in, double tau_rms) {
  if (in.sample_rate <= 0.0) throw std::invalid_argument("rms_envelope: empty buffer");
  if (tau_rms <= 0.0) throw std::invalid_argument("rms_envelope: tau must be positive");
  const double alpha = 1.0 - std::exp(-1.0 / (in.sample_rate * tau_rms));
  SignalBuffer out;
  out.sample_rate = in.sample_rate;
  out.samples.resize(in.samples.size());
  double s2 = 0.0;
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    const double x = in.samples[i];
    s2 += alpha * (x * x - s2);
    out.samples[i] = std::sqrt(s2);
  }
  return out;
}

// Crossing rate per frame: counts Schmitt-trigger flips of the mean-removed
// frame against a band of +/- hysteresis * (frame std). Both statistics are
// per-frame, so scaling the signal by any positive constant changes nothing.
// Returns one value per hop (hop <= 0 means non-overlapping frames).
inline SignalBuffer zcr_rate(const SignalBuffer& in, double frame_len,
                             double hysteresis, double hop = 0.0) {
  if (in.sample_rate <= 0.0) throw std::invalid_argument("zcr_rate: empty buffer");
  if (frame_len <= 0.0) throw std::invalid_argument("zcr_rate: bad frame length");
  if (hysteresis < 0.0) throw std::invalid_argument("zcr_rate: negative hysteresis");
  if (hop <= 0.0) hop = frame_len;
  const std::size_t frame_n =
      static_cast<std::size_t>(std::lround(frame_len * in.sample_rate));
  const std::size_t hop_n =
      static_cast<std::size_t>(std::lround(hop * in.sample_rate));
  if (frame_n < 2 || hop_n < 1) {
    throw std::invalid_argument("zcr_rate: frame shorter than two samples");
  }

  SignalBuffer out;
  out.sample_rate = 1.0 / hop;
  for (std::size_t start = 0; start + frame_n <= in.samples.size(); start += hop_n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < frame_n; ++i) mean += in.samples[start + i];
    mean /= frame_n;
    double var = 0.0;
    for (std::size_t i = 0; i < frame_n; ++i) {
      const double d = in.samples[start + i] - mean;
      var += d * d;
    }
    const double band = hysteresis * std::sqrt(var / frame_n);

    int state = 0;  // 0 unknown, +1 above band, -1 below band
    int crossings = 0;
    for (std::size_t i = 0; i < frame_n; ++i) {
      const double d = in.samples[start + i] - mean;
      if (d > band) {
        if (state == -1) ++crossings;
        state = 1;
      } else if (d < -band) {
        if (state == 1) ++crossings;
        state = -1;
      }
    }
    out.samples.push_back(crossings / frame_len);
  }
  return out;
}

struct FeatureConfig {
  double tau_rms = 0.100;     // s
  double env_frame = 2.0;     // s, crossing-rate frame for slow sequences
  double env_hop = 1.0;       // s, 50% overlap
  double raw_frame = 0.25;    // s, crossing-rate frame on the raw signal
  double hysteresis = 0.1;    // fraction of frame std
  double feature_rate = 10.0; // Hz of the emitted frame sequence
};

// x0: crossing rate of the RMS envelope (burst periodicity).
// x1: crossing rate of the raw-signal crossing-rate sequence (content
//     alternation). Both sequences update once per env_hop; the emitted
//     frame at time t holds the latest crossing frame fully contained in
//     [0, t], so the stream never reads ahead of t. Before the first frame
//     completes the first value is held (warm-up).
inline std::vector<FeatureFrame> extract_features(const SignalBuffer& in,
                                                  const FeatureConfig& cfg = {}) {
  if (in.sample_rate <= 0.0 || in.samples.empty()) {
    throw std::invalid_argument("extract_features: empty buffer");
  }
  if (in.duration() < cfg.env_frame) {
    throw std::invalid_argument("extract_features: buffer shorter than one frame");
  }
  const SignalBuffer x0_seq =
      zcr_rate(rms_envelope(in, cfg.tau_rms), cfg.env_frame, cfg.hysteresis, cfg.env_hop);
  const SignalBuffer raw_zcr = zcr_rate(in, cfg.raw_frame, cfg.hysteresis);
  const SignalBuffer x1_seq =
      zcr_rate(raw_zcr, cfg.env_frame, cfg.hysteresis, cfg.env_hop);

  const std::size_t usable = std::min(x0_seq.samples.size(), x1_seq.samples.size());
  if (usable == 0) throw std::invalid_argument("extract_features: buffer shorter than one frame");

  const std::size_t n_out =
      static_cast<std::size_t>(std::floor(in.duration() * cfg.feature_rate + 1e-9));
  std::vector<FeatureFrame> out;
  out.reserve(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    FeatureFrame f;
    f.t = j / cfg.feature_rate;
    const double done = f.t - cfg.env_frame;  // frame k is complete at k*hop + frame
    const std::size_t idx = done <= 0.0
        ? 0
        : std::min<std::size_t>(static_cast<std::size_t>(done / cfg.env_hop + 1e-9), usable - 1);
    f.x0 = x0_seq.samples[idx];
    f.x1 = x1_seq.samples[idx];
    out.push_back(f);
  }
  return out;
}

// Affine per-feature map fixed from training-split statistics: the 5th-95th
// percentile span maps to [0, 1], clamped. Full scale 1 mirrors the chip's
// input buffer, whose saturation level equals one unit current; the circuit
// worst-case accounting depends on inputs never exceeding that.
struct FeatureScale {
  double x0_offset = 0.0, x0_scale = 1.0;
  double x1_offset = 0.0, x1_scale = 1.0;

  static double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

  FeatureFrame apply(const FeatureFrame& f) const {
    FeatureFrame out = f;
    out.x0 = clamp01((f.x0 - x0_offset) * x0_scale);
    out.x1 = clamp01((f.x1 - x1_offset) * x1_scale);
    return out;
  }
};

namespace detail {
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}
}  // namespace detail

inline FeatureScale fit_feature_scale(const std::vector<WindowSample>& train_windows) {
  std::vector<double> a, b;
  for (const WindowSample& w : train_windows) {
    for (const FeatureFrame& f : w.frames) {
      a.push_back(f.x0);
      b.push_back(f.x1);
    }
  }
  if (a.empty()) throw std::invalid_argument("fit_feature_scale: no frames");
  FeatureScale s;
  const double a5 = detail::percentile(a, 0.05), a95 = detail::percentile(a, 0.95);
  const double b5 = detail::percentile(b, 0.05), b95 = detail::percentile(b, 0.95);
  s.x0_offset = a5;
  s.x0_scale = a95 - a5 > 1e-12 ? 1.0 / (a95 - a5) : 0.0;
  s.x1_offset = b5;
  s.x1_scale = b95 - b5 > 1e-12 ? 1.0 / (b95 - b5) : 0.0;
  return s;
}

inline WindowSample scale_window(const WindowSample& w, const FeatureScale& s) {
  WindowSample out;
  out.label = w.label;
  out.frames.reserve(w.frames.size());
  for (const FeatureFrame& f : w.frames) out.frames.push_back(s.apply(f));
  return out;
}

// Cuts non-overlapping windows tiled from each segment's start; a span that
// would straddle a segment boundary (or run past the features) is dropped.
inline std::vector<WindowSample> windowize(const std::vector<FeatureFrame>& frames,
                                           const std::vector<Segment>& timeline,
                                           double window_s = 24.0,
                                           double feature_rate = 10.0) {
  if (window_s <= 0.0 || feature_rate <= 0.0) {
    throw std::invalid_argument("windowize: bad window length or rate");
  }
  const std::size_t per_window =
      static_cast<std::size_t>(std::lround(window_s * feature_rate));
  std::vector<WindowSample> out;
  std::size_t cursor = 0;  // frames are time-ordered; advance monotonically
  for (const Segment& seg : timeline) {
    if (seg.end - seg.start < window_s) continue;
    for (double ws = seg.start; ws + window_s <= seg.end + 1e-9; ws += window_s) {
      while (cursor < frames.size() && frames[cursor].t < ws - 1e-9) ++cursor;
      std::size_t i = cursor;
      WindowSample w;
      w.label = segment_label(seg);
      w.frames.reserve(per_window);
      while (i < frames.size() && frames[i].t < ws + window_s - 1e-9) {
        w.frames.push_back(frames[i]);
        ++i;
      }
      if (w.frames.size() == per_window) out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace afua::dsp
