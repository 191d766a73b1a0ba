#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "afua/dsp.hpp"
#include "afua/synthgen.hpp"

using namespace afua;

namespace {

double interval_cv(const std::vector<double>& times) {
  REQUIRE(times.size() >= 3);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= gaps.size();
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var /= gaps.size();
  return std::sqrt(var) / mean;
}

}  // namespace

TEST_CASE("generators are deterministic in the seed") {
  synth::GenConfig cfg;
  std::mt19937_64 a(42), b(42), c(43);
  const dsp::SignalBuffer s1 = synth::gen_chew(20.0, cfg, a);
  const dsp::SignalBuffer s2 = synth::gen_chew(20.0, cfg, b);
  const dsp::SignalBuffer s3 = synth::gen_chew(20.0, cfg, c);
  CHECK(s1.samples == s2.samples);
  CHECK(s1.samples != s3.samples);
  CHECK(s1.samples.size() == 10000);
  CHECK(s1.sample_rate == 500.0);
}

TEST_CASE("chewing bursts: nearly periodic, speech bursts: irregular") {
  synth::GenConfig cfg;
  std::mt19937_64 rng(5);
  std::vector<double> chew_times;
  synth::gen_chew(120.0, cfg, rng, &chew_times);
  const double chew_cv = interval_cv(chew_times);
  CHECK(chew_cv <= 0.05);  // tight periodicity
  CHECK(chew_times.size() / 120.0 == Catch::Approx(cfg.chew_rate).epsilon(0.1));

  std::vector<double> talk_times;
  synth::gen_talk(120.0, cfg, rng, &talk_times);
  CHECK(interval_cv(talk_times) >= 0.4);  // speech-like irregularity
  CHECK(interval_cv(talk_times) > 4.0 * chew_cv);
}

TEST_CASE("cough transients: sparse enough for any 24 s window") {
  synth::GenConfig cfg;
  std::mt19937_64 rng(9);
  std::vector<double> times;
  synth::gen_cough(120.0, cfg, rng, &times);
  REQUIRE(!times.empty());
  for (double start = 0.0; start + 24.0 <= 120.0; start += 1.0) {
    const long in_window = std::count_if(times.begin(), times.end(), [&](double t) {
      return t >= start && t < start + 24.0;
    });
    CHECK(in_window <= 3);
  }
}

TEST_CASE("bursts stand far above the noise floor") {
  synth::GenConfig cfg;
  std::mt19937_64 rng(11);
  const dsp::SignalBuffer chew = synth::gen_chew(30.0, cfg, rng);
  const dsp::SignalBuffer quiet = synth::gen_silence(30.0, cfg, rng);
  double chew_peak = 0.0, quiet_peak = 0.0;
  for (double v : chew.samples) chew_peak = std::max(chew_peak, std::abs(v));
  for (double v : quiet.samples) quiet_peak = std::max(quiet_peak, std::abs(v));
  CHECK(chew_peak > 10.0 * quiet_peak);
  CHECK(quiet_peak < 6.0 * cfg.noise_floor);  // pure noise, a few sigma at most
}

TEST_CASE("unknown segment kind is rejected") {
  synth::GenConfig cfg;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(synth::gen_segment("yodeling", 10.0, cfg, rng), std::invalid_argument);
}

TEST_CASE("dataset assembly: alternation, timing, determinism") {
  synth::GenConfig cfg;
  cfg.seed = 77;
  const synth::Dataset d = synth::build_dataset(1200.0, cfg);
  REQUIRE(d.manifest.size() == 10);
  CHECK(d.signal.samples.size() == 600000);
  for (std::size_t i = 0; i < d.manifest.size(); ++i) {
    const dsp::Segment& seg = d.manifest[i];
    CHECK(seg.start == Catch::Approx(i * 120.0));
    CHECK(seg.end == Catch::Approx((i + 1) * 120.0));
    if (i % 2 == 0) {
      CHECK(seg.kind == "chew");
    } else {
      CHECK(seg.kind != "chew");
    }
  }
  // the interference rotation covers talking, quiet, and coughs
  std::vector<std::string> kinds;
  for (std::size_t i = 1; i < d.manifest.size(); i += 2) kinds.push_back(d.manifest[i].kind);
  CHECK(std::count(kinds.begin(), kinds.end(), "talk") == 2);
  CHECK(std::count(kinds.begin(), kinds.end(), "silence") == 2);
  CHECK(std::count(kinds.begin(), kinds.end(), "cough") == 1);

  const synth::Dataset d2 = synth::build_dataset(1200.0, cfg);
  CHECK(d2.signal.samples == d.signal.samples);

  CHECK_THROWS_AS(synth::build_dataset(100.0, cfg), std::invalid_argument);
}

TEST_CASE("chewing separates from interference in feature space") {
  synth::GenConfig cfg;
  cfg.seed = 3;
  const synth::Dataset d = synth::build_dataset(1200.0, cfg);
  const std::vector<dsp::FeatureFrame> frames = dsp::extract_features(d.signal);
  const std::vector<dsp::WindowSample> windows = dsp::windowize(frames, d.manifest);
  REQUIRE(windows.size() == 50);

  double chew_mean = 0.0, other_mean = 0.0;
  long chew_n = 0, other_n = 0;
  std::vector<double> chew_x0, other_x0;
  for (const dsp::WindowSample& w : windows) {
    double m = 0.0;
    for (const dsp::FeatureFrame& f : w.frames) m += f.x0;
    m /= w.frames.size();
    if (w.label == Label::chewing) {
      chew_mean += m;
      ++chew_n;
      chew_x0.push_back(m);
    } else {
      other_mean += m;
      ++other_n;
      other_x0.push_back(m);
    }
  }
  chew_mean /= chew_n;
  other_mean /= other_n;
  INFO("mean envelope-crossing rate: chew " << chew_mean << ", other " << other_mean);
  CHECK(chew_mean < other_mean);  // slow chew rhythm vs faster interference

  // some split point on mean x0 classifies nearly every window ("other" is
  // multi-modal, so the best cut is not the midpoint of the class means)
  long best = 0;
  for (double cut : other_x0) {
    long correct = 0;
    for (double v : chew_x0) correct += v < cut;
    for (double v : other_x0) correct += v >= cut;
    best = std::max(best, correct);
  }
  INFO("best single-threshold separability " << best << "/" << windows.size());
  CHECK(best >= 45);
}
