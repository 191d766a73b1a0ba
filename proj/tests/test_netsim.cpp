#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "afua/core.hpp"
#include "afua/dsp.hpp"
#include "afua/netsim.hpp"

using namespace afua;
using core::Mat;
using core::Vec;

namespace {

core::ModelParams random_params(std::mt19937_64& rng, double range = 2.0) {
  std::uniform_real_distribution<double> u(-range, range);
  core::ModelParams p = core::ModelParams::zeros(2, 2);
  auto fill = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = u(rng);
  };
  fill(p.W);
  fill(p.Wz);
  fill(p.U);
  fill(p.Uz);
  p.b = Vec::NullaryExpr(2, [&](Eigen::Index) { return u(rng); });
  p.bz = Vec::NullaryExpr(2, [&](Eigen::Index) { return u(rng); });
  return p;
}

dsp::WindowSample random_window(std::mt19937_64& rng, int frames, Label label) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dsp::WindowSample w;
  w.label = label;
  for (int t = 0; t < frames; ++t) w.frames.push_back({t * 0.1, u(rng), u(rng)});
  return w;
}

// rank-statistic area (Mann-Whitney with tie correction), an independent
// route to the same quantity the threshold sweep integrates
double rank_auc(const std::vector<double>& scores, const std::vector<bool>& is_pos) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = (i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double rank_sum = 0.0;
  long n_pos = 0, n_neg = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (is_pos[k]) {
      rank_sum += rank[k];
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace

TEST_CASE("quantization: rounding, ties away from zero, clipping") {
  core::ModelParams p = core::ModelParams::zeros(2, 2);
  p.W << 0.49, 0.5, -0.5, 1.49;
  p.Wz << 1.5, 2.5, -2.5, -1.5;
  p.U << 3.2, 5.0, -3.2, -7.0;
  p.Uz << 2.999, -2.999, 0.0, -0.0;
  p.b << 0.999, -0.999;
  p.bz << 3.0, -3.0;
  const net::QuantizedParams q = net::quantize(p);
  CHECK(q.W(0, 0) == 0);
  CHECK(q.W(0, 1) == 1);   // tie 0.5 rounds away from zero
  CHECK(q.W(1, 0) == -1);  // tie -0.5 likewise
  CHECK(q.W(1, 1) == 1);
  CHECK(q.Wz(0, 0) == 2);
  CHECK(q.Wz(0, 1) == 3);
  CHECK(q.Wz(1, 0) == -3);
  CHECK(q.Wz(1, 1) == -2);
  CHECK(q.U(0, 0) == 3);
  CHECK(q.U(0, 1) == 3);   // clipped
  CHECK(q.U(1, 0) == -3);
  CHECK(q.U(1, 1) == -3);  // clipped
  CHECK(q.Uz(0, 0) == 3);
  CHECK(q.Uz(0, 1) == -3);
  CHECK(q.b[0] == 1);
  CHECK(q.b[1] == -1);
  CHECK(q.bz[0] == 3);
  CHECK(q.bz[1] == -3);
}

TEST_CASE("quantization: idempotent on the grid") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> grid(-3, 3);
  for (int trial = 0; trial < 10; ++trial) {
    net::QuantizedParams q;
    q.W = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.Wz = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.U = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.Uz = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.b = net::VecI::NullaryExpr(2, [&](Eigen::Index) { return grid(rng); });
    q.bz = net::VecI::NullaryExpr(2, [&](Eigen::Index) { return grid(rng); });
    const net::QuantizedParams q2 = net::quantize(net::to_model_params(q));
    CHECK(q2.W == q.W);
    CHECK(q2.Wz == q.Wz);
    CHECK(q2.U == q.U);
    CHECK(q2.Uz == q.Uz);
    CHECK(q2.b == q.b);
    CHECK(q2.bz == q.bz);
  }
}

TEST_CASE("quantized step agrees with the real-weight step on grid weights") {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> grid(-3, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    net::QuantizedParams q;
    q.W = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.Wz = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.U = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.Uz = net::MatI::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return grid(rng); });
    q.b = net::VecI::NullaryExpr(2, [&](Eigen::Index) { return grid(rng); });
    q.bz = net::VecI::NullaryExpr(2, [&](Eigen::Index) { return grid(rng); });
    const core::ModelParams p = net::to_model_params(q);

    Vec h_q = core::initial_state(2), h_p = core::initial_state(2);
    for (int t = 0; t < 40; ++t) {
      const Vec x = Vec::NullaryExpr(2, [&](Eigen::Index) { return u(rng); });
      h_q = net::step_discrete(q, x, h_q);
      h_p = core::step_discrete(p, x, h_p);
      REQUIRE((h_q - h_p).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("classification: score sign and tie rule") {
  // symmetric rows force h_1 == h_0, so the score is exactly zero
  core::ModelParams p = core::ModelParams::zeros(2, 2);
  p.W << 1.0, 0.5, 1.0, 0.5;
  p.Wz << 0.7, 0.2, 0.7, 0.2;
  p.b << 0.3, 0.3;
  p.bz << 0.4, 0.4;
  std::mt19937_64 rng(47);
  const dsp::WindowSample w = random_window(rng, 30, Label::chewing);
  const net::Prediction pr = net::classify_window(p, w);
  CHECK(pr.score == 0.0);
  CHECK(pr.label == Label::chewing);  // ties go to chewing
  CHECK(net::classify_window(p, w, 1e-9).label == Label::not_chewing);
}

TEST_CASE("classification requires the deployed topology") {
  core::ModelParams p = core::ModelParams::zeros(3, 2);
  std::mt19937_64 rng(53);
  const dsp::WindowSample w = random_window(rng, 5, Label::chewing);
  CHECK_THROWS_AS(net::classify_window(p, w), std::invalid_argument);
}

TEST_CASE("confusion metrics: frozen example and algebraic identity") {
  net::ConfusionCounts c;
  c.tp = 41;
  c.fp = 2;
  c.fn = 7;
  c.tn = 50;
  const net::ConfusionMetrics m = net::confusion_metrics(c);
  CHECK(m.accuracy == Catch::Approx(0.91).margin(1e-15));
  REQUIRE(m.precision);
  REQUIRE(m.recall);
  REQUIRE(m.f1);
  CHECK(*m.precision == Catch::Approx(41.0 / 43.0).margin(1e-15));
  CHECK(*m.recall == Catch::Approx(41.0 / 48.0).margin(1e-15));
  // f1 = 2tp / (2tp + fp + fn), independently of the precision/recall route
  CHECK(*m.f1 == Catch::Approx(82.0 / 91.0).margin(1e-12));
}

TEST_CASE("confusion metrics: undefined ratios stay empty") {
  net::ConfusionCounts c;
  c.tn = 5;
  c.fn = 2;
  const net::ConfusionMetrics m = net::confusion_metrics(c);
  CHECK(m.accuracy == Catch::Approx(5.0 / 7.0));
  CHECK_FALSE(m.precision);  // no positive predictions
  REQUIRE(m.recall);
  CHECK(*m.recall == 0.0);
  CHECK_FALSE(m.f1);
  CHECK_THROWS_AS(net::confusion_metrics(net::ConfusionCounts{}), std::invalid_argument);
}

TEST_CASE("evaluate matches a hand-rolled confusion loop") {
  std::mt19937_64 rng(59);
  const core::ModelParams p = random_params(rng);
  std::vector<dsp::WindowSample> windows;
  for (int i = 0; i < 30; ++i) {
    windows.push_back(random_window(rng, 20, i % 3 == 0 ? Label::chewing : Label::not_chewing));
  }
  const net::ConfusionMetrics m = net::evaluate(p, windows, 0.05);
  net::ConfusionCounts c;
  for (const dsp::WindowSample& w : windows) {
    const bool predicted = net::classify_window(p, w, 0.05).label == Label::chewing;
    const bool actual = w.label == Label::chewing;
    if (actual && predicted) ++c.tp;
    if (actual && !predicted) ++c.fn;
    if (!actual && predicted) ++c.fp;
    if (!actual && !predicted) ++c.tn;
  }
  CHECK(m.counts.tp == c.tp);
  CHECK(m.counts.fp == c.fp);
  CHECK(m.counts.tn == c.tn);
  CHECK(m.counts.fn == c.fn);
  CHECK(m.counts.total() == 30);
}

TEST_CASE("roc: perfectly separated scores give area exactly 1") {
  // single-frame windows, no state feedback: score = 1.8 (f(3 x0) - 0.9),
  // strictly increasing in x0, so high-x0 chewing windows separate cleanly
  core::ModelParams p = core::ModelParams::zeros(2, 2);
  p.bz << 3.0, 3.0;
  p.b << 3.0, 0.0;
  p.W << 0.0, 0.0, 3.0, 0.0;

  std::vector<dsp::WindowSample> windows;
  for (double x0 : {0.05, 0.15, 0.25, 0.35}) {
    dsp::WindowSample w;
    w.label = Label::not_chewing;
    w.frames.push_back({0.0, x0, 0.0});
    windows.push_back(w);
  }
  for (double x0 : {0.65, 0.75, 0.85, 0.95}) {
    dsp::WindowSample w;
    w.label = Label::chewing;
    w.frames.push_back({0.0, x0, 0.0});
    windows.push_back(w);
  }
  const net::RocCurve curve = net::roc(p, windows, 256);
  REQUIRE(curve.points.size() == 256);
  CHECK(curve.auc == Catch::Approx(1.0).margin(1e-12));
  CHECK(curve.points.front().sensitivity == 1.0);
  CHECK(curve.points.front().specificity == 0.0);
  CHECK(curve.points.back().sensitivity == 0.0);
  CHECK(curve.points.back().specificity == 1.0);

  // one mislabeled window drops the area strictly below 1
  windows[0].label = Label::chewing;
  const net::RocCurve worse = net::roc(p, windows, 256);
  CHECK(worse.auc < 1.0);
  CHECK(worse.auc > 0.5);
}

TEST_CASE("roc: threshold sweep area matches the rank statistic") {
  std::mt19937_64 rng(61);
  const core::ModelParams p = random_params(rng);
  std::vector<dsp::WindowSample> windows;
  for (int i = 0; i < 40; ++i) {
    windows.push_back(random_window(rng, 25, i % 2 == 0 ? Label::chewing : Label::not_chewing));
  }
  const net::RocCurve curve = net::roc(p, windows, 2048);

  std::vector<double> scores;
  std::vector<bool> is_pos;
  for (const dsp::WindowSample& w : windows) {
    scores.push_back(net::classify_window(p, w).score);
    is_pos.push_back(w.label == Label::chewing);
  }
  CHECK(curve.auc == Catch::Approx(rank_auc(scores, is_pos)).margin(0.03));

  double prev = 2.0;
  for (const net::RocPoint& pt : curve.points) {
    CHECK(pt.sensitivity <= prev + 1e-15);  // non-increasing with threshold
    prev = pt.sensitivity;
    CHECK(pt.sensitivity >= 0.0);
    CHECK(pt.specificity >= 0.0);
    CHECK(pt.sensitivity <= 1.0);
    CHECK(pt.specificity <= 1.0);
  }
  CHECK(curve.auc >= 0.0);
  CHECK(curve.auc <= 1.0);
}

TEST_CASE("roc rejects a single-class test set") {
  std::mt19937_64 rng(67);
  const core::ModelParams p = random_params(rng);
  std::vector<dsp::WindowSample> windows;
  for (int i = 0; i < 5; ++i) windows.push_back(random_window(rng, 10, Label::chewing));
  CHECK_THROWS_AS(net::roc(p, windows), std::invalid_argument);
}
