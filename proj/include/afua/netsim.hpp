#pragma once

// Network-level evaluation: 3-bit signed weight quantization, window
// classification from the final hidden state, ROC sweeps, and confusion
// metrics. The quantized forward path works from integer tensors directly so
// the "integer-weighted sums only" property is visible in the types.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "afua/common.hpp"
#include "afua/core.hpp"
#include "afua/dsp.hpp"

namespace afua::net {

using core::Mat;
using core::Vec;
using MatI = Eigen::MatrixXi;
using VecI = Eigen::VectorXi;

constexpr int kWeightLimit = 3;  // signed 3-bit grid {-3..3}

struct QuantizedParams {
  MatI W, Wz;
  MatI U, Uz;
  VecI b, bz;

  Eigen::Index units() const { return W.rows(); }
  Eigen::Index inputs() const { return W.cols(); }

  void check_shapes() const {
    const Eigen::Index m = units(), n = inputs();
    if (m < 1 || n < 1 || Wz.rows() != m || Wz.cols() != n || U.rows() != m ||
        U.cols() != m || Uz.rows() != m || Uz.cols() != m || b.size() != m ||
        bz.size() != m) {
      throw std::invalid_argument("QuantizedParams: inconsistent tensor shapes");
    }
    auto in_range = [](int v) { return v >= -kWeightLimit && v <= kWeightLimit; };
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < n; ++c)
        if (!in_range(W(r, c)) || !in_range(Wz(r, c)))
          throw std::invalid_argument("QuantizedParams: weight outside the 3-bit grid");
      for (Eigen::Index c = 0; c < m; ++c)
        if (!in_range(U(r, c)) || !in_range(Uz(r, c)))
          throw std::invalid_argument("QuantizedParams: weight outside the 3-bit grid");
      if (!in_range(b[r]) || !in_range(bz[r]))
        throw std::invalid_argument("QuantizedParams: bias outside the 3-bit grid");
    }
  }
};

namespace detail {
inline int round_clip(double w) {
  // round to nearest, ties away from zero, then clip to the 3-bit grid
  const double r = std::round(w);
  return static_cast<int>(std::max<double>(-kWeightLimit, std::min<double>(kWeightLimit, r)));
}

inline MatI quantize_mat(const Mat& m) {
  MatI out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = round_clip(m(i, j));
  return out;
}

inline VecI quantize_vec(const Vec& v) {
  VecI out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = round_clip(v[i]);
  return out;
}
}  // namespace detail

inline QuantizedParams quantize(const core::ModelParams& p) {
  p.check_shapes();
  QuantizedParams q;
  q.W = detail::quantize_mat(p.W);
  q.Wz = detail::quantize_mat(p.Wz);
  q.U = detail::quantize_mat(p.U);
  q.Uz = detail::quantize_mat(p.Uz);
  q.b = detail::quantize_vec(p.b);
  q.bz = detail::quantize_vec(p.bz);
  return q;
}

// Integer grid points embed exactly in double, so this is lossless.
inline core::ModelParams to_model_params(const QuantizedParams& q) {
  core::ModelParams p;
  p.W = q.W.cast<double>();
  p.Wz = q.Wz.cast<double>();
  p.U = q.U.cast<double>();
  p.Uz = q.Uz.cast<double>();
  p.b = q.b.cast<double>();
  p.bz = q.bz.cast<double>();
  return p;
}

// Quantized cell step: pre-activations are sums of real inputs weighted by
// integers; no floating-point weight value is ever touched.
inline Vec step_discrete(const QuantizedParams& q, const Vec& x, const Vec& h) {
  if (x.size() != q.inputs() || h.size() != q.units()) {
    throw std::invalid_argument("quantized step: dimension mismatch");
  }
  const Eigen::Index m = q.units(), n = q.inputs();
  Vec out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double az = static_cast<double>(q.bz[j]);
    double ac = static_cast<double>(q.b[j]);
    for (Eigen::Index i = 0; i < n; ++i) {
      az += q.Wz(j, i) * x[i];
      ac += q.W(j, i) * x[i];
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = h[i] - 1.0;
      az += q.Uz(j, i) * d;
      ac += q.U(j, i) * d;
    }
    const double z = core::activation(az);
    const double c = core::activation(ac);
    out[j] = (1.0 - z) * h[j] + 2.0 * z * c;
  }
  return out;
}

// Decision rule: unit 0 accumulates evidence against chewing, unit 1 for it.
// score = h_1 - h_0 at the end of the window; ties go to chewing.
struct Prediction {
  Label label = Label::not_chewing;
  double score = 0.0;
  Vec h_final;
};

namespace detail {
template <typename Params, typename StepFn>
Prediction classify_impl(const Params& p, const dsp::WindowSample& w,
                         double threshold, StepFn step) {
  if (w.frames.empty()) throw std::invalid_argument("classify: empty window");
  if (p.units() != 2 || p.inputs() != 2) {
    throw std::invalid_argument("classify: expects a 2-unit, 2-input network");
  }
  Vec h = core::initial_state(p.units());
  Vec x(2);
  for (const dsp::FeatureFrame& f : w.frames) {
    x[0] = f.x0;
    x[1] = f.x1;
    h = step(p, x, h);
  }
  Prediction out;
  out.h_final = h;
  out.score = h[1] - h[0];
  out.label = out.score >= threshold ? Label::chewing : Label::not_chewing;
  return out;
}
}  // namespace detail

inline Prediction classify_window(const core::ModelParams& p, const dsp::WindowSample& w,
                                  double threshold = 0.0) {
  return detail::classify_impl(p, w, threshold,
                               [](const core::ModelParams& pp, const Vec& x, const Vec& h) {
                                 return core::step_discrete(pp, x, h);
                               });
}

inline Prediction classify_window(const QuantizedParams& q, const dsp::WindowSample& w,
                                  double threshold = 0.0) {
  return detail::classify_impl(q, w, threshold,
                               [](const QuantizedParams& qq, const Vec& x, const Vec& h) {
                                 return step_discrete(qq, x, h);
                               });
}

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

struct ConfusionMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  std::optional<double> precision, recall, f1;  // empty when the denominator is zero
};

inline ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::invalid_argument("confusion_metrics: no samples");
  ConfusionMetrics m;
  m.counts = c;
  m.accuracy = static_cast<double>(c.tp + c.tn) / c.total();
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

template <typename Params>
ConfusionMetrics evaluate(const Params& p, const std::vector<dsp::WindowSample>& windows,
                          double threshold = 0.0) {
  ConfusionCounts c;
  for (const dsp::WindowSample& w : windows) {
    const Prediction pr = classify_window(p, w, threshold);
    const bool actual = w.label == Label::chewing;
    const bool predicted = pr.label == Label::chewing;
    if (actual && predicted) ++c.tp;
    else if (actual && !predicted) ++c.fn;
    else if (!actual && predicted) ++c.fp;
    else ++c.tn;
  }
  return confusion_metrics(c);
}

struct RocPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;  // TPR over chewing windows
  double specificity = 0.0;  // TNR over not-chewing windows
};

struct RocCurve {
  std::vector<RocPoint> points;  // ordered by ascending threshold
  double auc = 0.0;
};

// Sweeps n_thresholds evenly spaced values across the observed score range
// (plus one step past the top so the curve closes at sensitivity 0) and
// integrates the trapezoid area under (FPR, TPR).
template <typename Params>
RocCurve roc(const Params& p, const std::vector<dsp::WindowSample>& windows,
             int n_thresholds = 256) {
  if (n_thresholds < 2) throw std::invalid_argument("roc: need at least two thresholds");
  std::vector<double> scores;
  scores.reserve(windows.size());
  long n_pos = 0, n_neg = 0;
  for (const dsp::WindowSample& w : windows) {
    scores.push_back(classify_window(p, w).score);
    (w.label == Label::chewing ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc: test set must contain both classes");
  }
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  const double step = hi > lo ? (hi - lo) / (n_thresholds - 2) : 1.0;

  RocCurve curve;
  curve.points.reserve(n_thresholds);
  for (int k = 0; k < n_thresholds; ++k) {
    const double thr = lo + k * step;  // last value lands one step past hi
    long tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool predicted = scores[i] >= thr;
      const bool actual = windows[i].label == Label::chewing;
      if (actual && predicted) ++tp;
      if (!actual && !predicted) ++tn;
    }
    curve.points.push_back({thr, static_cast<double>(tp) / n_pos,
                            static_cast<double>(tn) / n_neg});
  }

  // ascending threshold walks (FPR, TPR) from (1, 1) down to (0, 0)
  double auc = 0.0;
  double prev_fpr = 1.0, prev_tpr = 1.0;
  for (const RocPoint& pt : curve.points) {
    const double fpr = 1.0 - pt.specificity;
    auc += (prev_fpr - fpr) * (prev_tpr + pt.sensitivity) / 2.0;
    prev_fpr = fpr;
    prev_tpr = pt.sensitivity;
  }
  auc += prev_fpr * prev_tpr / 2.0;  // close to (0, 0)
  curve.auc = auc;
  return curve;
}

}  // namespace afua::net
