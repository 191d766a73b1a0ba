// Command-line front end for the chewing-detection pipeline: synthesize a
// labeled recording, extract feature windows, train, quantize, evaluate, and
// run the current-domain analyses. Every artifact lands in --out and is
// stamped with the hash of the effective run configuration.
//
// Exit codes: 0 success, 1 usage or input error, 2 internal invariant failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afua/circuit.hpp"
#include "afua/common.hpp"
#include "afua/core.hpp"
#include "afua/dsp.hpp"
#include "afua/io.hpp"
#include "afua/netsim.hpp"
#include "afua/synthgen.hpp"
#include "afua/trainer.hpp"

namespace {

using namespace afua;

std::vector<dsp::WindowSample> apply_scale(const std::vector<dsp::WindowSample>& ws,
                                           const dsp::FeatureScale& scale) {
  std::vector<dsp::WindowSample> out;
  out.reserve(ws.size());
  for (const dsp::WindowSample& w : ws) out.push_back(dsp::scale_window(w, scale));
  return out;
}

void save_feature_trace(const std::string& path, const std::vector<dsp::FeatureFrame>& frames,
                        const std::string& hash) {
  std::string out = "# features: t x0 x1\n# config_hash " + hash + "\n";
  char buf[96];
  for (const dsp::FeatureFrame& f : frames) {
    std::snprintf(buf, sizeof(buf), "%.6f %.17g %.17g\n", f.t, f.x0, f.x1);
    out += buf;
  }
  io::write_text_file(path, out);
}

int run_gen(const io::RunConfig& cfg, const std::string& out_dir) {
  const std::string hash = io::config_hash(cfg);
  const synth::Dataset data = synth::build_dataset(cfg.total_duration, cfg.gen);
  io::save_signal(out_dir + "/signal.txt", data.signal, hash);
  io::save_manifest(out_dir + "/manifest.txt", data.manifest, hash);
  std::cout << "generated " << data.signal.duration() << " s at " << data.signal.sample_rate
            << " Hz, " << data.manifest.size() << " segments -> " << out_dir
            << "/signal.txt\n";
  return 0;
}

int run_features(const io::RunConfig& cfg, const std::string& out_dir,
                 const std::string& signal_path, const std::string& manifest_path) {
  const std::string hash = io::config_hash(cfg);
  dsp::SignalBuffer sig = io::load_signal(signal_path);
  const std::vector<dsp::Segment> manifest = io::load_manifest(manifest_path);
  if (cfg.resample_rate > 0.0 && cfg.resample_rate != sig.sample_rate) {
    sig = dsp::resample(sig, cfg.resample_rate);
  }
  if (cfg.hp_cutoff > 0.0) sig = dsp::highpass(sig, cfg.hp_cutoff);
  const std::vector<dsp::FeatureFrame> frames = dsp::extract_features(sig, cfg.features);
  const std::vector<dsp::WindowSample> windows =
      dsp::windowize(frames, manifest, cfg.window_seconds, cfg.features.feature_rate);
  if (windows.empty()) throw std::runtime_error("features: no complete windows in the input");
  io::save_windows(out_dir + "/windows.json", windows, cfg.features.feature_rate,
                   cfg.window_seconds, hash);
  save_feature_trace(out_dir + "/features.txt", frames, hash);
  long pos = 0;
  for (const dsp::WindowSample& w : windows) pos += w.label == Label::chewing;
  std::cout << "extracted " << frames.size() << " frames -> " << windows.size() << " windows ("
            << pos << " chewing, " << windows.size() - pos << " other) -> " << out_dir
            << "/windows.json\n";
  return 0;
}

int run_train(const io::RunConfig& cfg, const std::string& out_dir,
              const std::string& windows_path) {
  const std::string hash = io::config_hash(cfg);
  const io::WindowsFile wf = io::load_windows(windows_path);
  const train::TrainResult res = train::train(wf.windows, cfg.train);

  io::save_weights(out_dir + "/weights_fp.json", res.params, res.scale, hash);
  io::json report = io::to_json(res.report, res.split);
  report["format_version"] = 1;
  report["config_hash"] = hash;
  io::write_json_file(out_dir + "/train_report.json", report);

  // test subset in raw feature units; evaluation re-applies the stored scale
  std::vector<dsp::WindowSample> test;
  for (std::size_t i : res.split.test) test.push_back(wf.windows[i]);
  io::save_windows(out_dir + "/windows_test.json", test, wf.feature_rate, wf.window_seconds,
                   hash);

  const train::EpochStats last = res.report.epochs.back();
  std::cout << "trained " << res.report.epochs.size() << " epochs in "
            << res.report.wallclock_seconds << " s; best epoch " << res.report.best_epoch
            << " valid_loss " << res.report.best_valid_loss << " (final train_acc "
            << last.train_acc << ", valid_acc " << last.valid_acc << ")\n";
  if (res.report.diverged) {
    std::cout << "warning: training diverged (" << res.report.divergence_note
              << "); kept the last good checkpoint\n";
  }
  std::cout << "weights -> " << out_dir << "/weights_fp.json; test subset ("
            << test.size() << " windows) -> " << out_dir << "/windows_test.json\n";
  return 0;
}

int run_quantize(const std::string& out_dir, const std::string& weights_path) {
  const io::WeightsFile w = io::load_weights(weights_path);
  if (w.quantized) throw std::runtime_error("quantize: input is already quantized");
  const net::QuantizedParams q = net::quantize(w.params);
  io::save_weights(out_dir + "/weights_q.json", q, w.scale, w.config_hash);
  double worst = 0.0;
  const core::ModelParams back = net::to_model_params(q);
  worst = std::max(worst, (w.params.W - back.W).cwiseAbs().maxCoeff());
  worst = std::max(worst, (w.params.Wz - back.Wz).cwiseAbs().maxCoeff());
  worst = std::max(worst, (w.params.U - back.U).cwiseAbs().maxCoeff());
  worst = std::max(worst, (w.params.Uz - back.Uz).cwiseAbs().maxCoeff());
  worst = std::max(worst, (w.params.b - back.b).cwiseAbs().maxCoeff());
  worst = std::max(worst, (w.params.bz - back.bz).cwiseAbs().maxCoeff());
  std::cout << "quantized to the signed 3-bit grid (max rounding delta " << worst << ") -> "
            << out_dir << "/weights_q.json\n";
  return 0;
}

int run_eval(const io::RunConfig& cfg, const std::string& out_dir,
             const std::string& weights_path, const std::string& windows_path,
             double threshold) {
  const io::WeightsFile w = io::load_weights(weights_path);
  const io::WindowsFile wf = io::load_windows(windows_path);
  const std::vector<dsp::WindowSample> scaled = apply_scale(wf.windows, w.scale);

  net::ConfusionMetrics m;
  net::RocCurve roc;
  if (w.quantized) {
    m = net::evaluate(w.qparams, scaled, threshold);
    roc = net::roc(w.qparams, scaled, cfg.roc_thresholds);
  } else {
    m = net::evaluate(w.params, scaled, threshold);
    roc = net::roc(w.params, scaled, cfg.roc_thresholds);
  }

  io::json j;
  j["format_version"] = 1;
  j["config_hash"] = w.config_hash;
  j["kind"] = w.quantized ? "quantized" : "full_precision";
  j["threshold"] = threshold;
  j["metrics"] = io::to_json(m);
  j["roc"] = io::to_json(roc);
  io::write_json_file(out_dir + (w.quantized ? "/metrics_q.json" : "/metrics_fp.json"), j);

  std::vector<std::pair<double, double>> curve;
  for (const net::RocPoint& p : roc.points) curve.emplace_back(1.0 - p.specificity, p.sensitivity);
  io::save_xy(out_dir + (w.quantized ? "/roc_q.txt" : "/roc_fp.txt"), curve,
              "roc: false_positive_rate sensitivity");

  std::cout << (w.quantized ? "quantized" : "full-precision") << " eval on " << scaled.size()
            << " windows: accuracy " << m.accuracy;
  if (m.recall) std::cout << ", sensitivity " << *m.recall;
  const double spec =
      m.counts.tn + m.counts.fp > 0
          ? static_cast<double>(m.counts.tn) / (m.counts.tn + m.counts.fp)
          : 0.0;
  std::cout << ", specificity " << spec << ", auc " << roc.auc << "\n";
  return 0;
}

int run_montecarlo(const io::RunConfig& cfg, const std::string& out_dir,
                   const std::string& weights_path, const std::string& windows_path) {
  const io::WeightsFile w = io::load_weights(weights_path);
  if (!w.quantized) throw std::runtime_error("montecarlo: expects quantized weights");
  const io::WindowsFile wf = io::load_windows(windows_path);
  const std::vector<dsp::WindowSample> scaled = apply_scale(wf.windows, w.scale);

  const circuit::MonteCarloResult res = circuit::monte_carlo(w.qparams, scaled, cfg.mc, cfg.circuit);

  io::json j = io::to_json(res);
  j["format_version"] = 1;
  j["config_hash"] = w.config_hash;
  j["n_runs"] = cfg.mc.n_runs;
  j["sigma"] = cfg.mc.mismatch.sigma;
  io::write_json_file(out_dir + "/mc.json", j);

  double lo = 1.0, hi = 0.0;
  for (double a : res.accuracies) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  std::cout << "mismatch runs: " << res.accuracies.size() << " at sigma "
            << cfg.mc.mismatch.sigma << "; nominal " << res.nominal_accuracy << ", median "
            << res.median_accuracy << ", range [" << lo << ", " << hi << "] -> " << out_dir
            << "/mc.json\n";
  return 0;
}

int run_power(const io::RunConfig& cfg, const std::string& out_dir,
              const std::string& weights_path, const std::string& windows_path) {
  const io::WeightsFile w = io::load_weights(weights_path);
  if (!w.quantized) throw std::runtime_error("power: expects quantized weights");
  const io::WindowsFile wf = io::load_windows(windows_path);
  const std::vector<dsp::WindowSample> scaled = apply_scale(wf.windows, w.scale);

  const circuit::PowerReport rep = circuit::simulate_current_draw(
      w.qparams, scaled, cfg.circuit, nullptr, cfg.mc.substeps_per_frame);

  const double m = static_cast<double>(w.qparams.units());
  const double n = static_cast<double>(w.qparams.inputs());
  const double ops_per_step = 4.0 * m * (n + m);  // one multiply + one add per weight
  const double step = cfg.circuit.tau_nominal();
  const double opw = circuit::ops_per_watt(cfg.circuit, rep.mean_total_units, ops_per_step, step);
  const circuit::SystemPowerReport sys = circuit::system_power(cfg.power);

  io::json j = io::to_json(rep);
  j["format_version"] = 1;
  j["config_hash"] = w.config_hash;
  j["ops_per_step"] = ops_per_step;
  j["step_period_s"] = step;
  j["ops_per_watt"] = opw;
  j["system"] = io::to_json(sys);
  io::write_json_file(out_dir + "/power.json", j);
  io::save_xy(out_dir + "/scatter.txt", rep.scatter, "per-window mean: vmm_units total_units");

  std::cout << "mean draw " << rep.mean_total_units << " units (bound " << rep.eq_bound_units
            << ", worst seen " << rep.worst_total_units << "), " << rep.mean_power_watts * 1e6
            << " uW core, " << opw << " ops/W; system avg " << sys.total_avg_W * 1e6
            << " uW at duty " << sys.active_fraction << " -> " << out_dir << "/power.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"current-mode gated-unit chewing detector pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // let --config/--out appear after the subcommand

  std::string config_path;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "JSON run configuration (strict keys)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  std::string signal_path, manifest_path, windows_path, weights_path;
  double duration_override = -1.0;
  std::int64_t seed_override = -1;
  double threshold = 0.0;
  double sigma_override = -1.0;
  int runs_override = -1;
  double feature_rate_override = -1.0;

  CLI::App* gen = app.add_subcommand("gen", "synthesize a labeled sensor recording");
  gen->add_option("--duration", duration_override, "total seconds to generate");
  gen->add_option("--seed", seed_override, "generator seed");

  CLI::App* features = app.add_subcommand("features", "signal -> feature windows");
  features->add_option("--signal", signal_path, "input signal file");
  features->add_option("--manifest", manifest_path, "segment manifest");
  features->add_option("--feature-rate", feature_rate_override, "emitted frame rate, Hz");

  CLI::App* tr = app.add_subcommand("train", "fit the two-unit detector");
  tr->add_option("--windows", windows_path, "feature windows file");
  tr->add_option("--seed", seed_override, "training seed");

  CLI::App* qz = app.add_subcommand("quantize", "full-precision weights -> 3-bit grid");
  qz->add_option("--weights", weights_path, "full-precision weights file");

  CLI::App* ev = app.add_subcommand("eval", "confusion metrics and operating curve");
  ev->add_option("--weights", weights_path, "weights file (either kind)");
  ev->add_option("--windows", windows_path, "feature windows file");
  ev->add_option("--threshold", threshold, "decision threshold on the unit-1 minus unit-0 score")
      ->capture_default_str();

  CLI::App* mc = app.add_subcommand("montecarlo", "device-mismatch accuracy spread");
  mc->add_option("--weights", weights_path, "quantized weights file");
  mc->add_option("--windows", windows_path, "feature windows file");
  mc->add_option("--sigma", sigma_override, "mismatch spread");
  mc->add_option("--runs", runs_override, "number of mismatch instances");

  CLI::App* pw = app.add_subcommand("power", "current draw, efficiency, system average");
  pw->add_option("--weights", weights_path, "quantized weights file");
  pw->add_option("--windows", windows_path, "feature windows file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    afua::io::RunConfig cfg;
    if (!config_path.empty()) cfg = afua::io::load_run_config(config_path);
    if (duration_override > 0.0) cfg.total_duration = duration_override;
    if (seed_override >= 0) {
      cfg.gen.seed = static_cast<std::uint64_t>(seed_override);
      cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (sigma_override >= 0.0) cfg.mc.mismatch.sigma = sigma_override;
    if (runs_override > 0) cfg.mc.n_runs = runs_override;
    if (feature_rate_override > 0.0) cfg.features.feature_rate = feature_rate_override;

    std::filesystem::create_directories(out_dir);
    if (signal_path.empty()) signal_path = out_dir + "/signal.txt";
    if (manifest_path.empty()) manifest_path = out_dir + "/manifest.txt";
    if (windows_path.empty()) {
      windows_path = out_dir + (ev->parsed() || mc->parsed() || pw->parsed()
                                    ? "/windows_test.json"
                                    : "/windows.json");
    }
    if (weights_path.empty()) {
      weights_path = out_dir + (qz->parsed() ? "/weights_fp.json" : "/weights_q.json");
    }

    if (gen->parsed()) return run_gen(cfg, out_dir);
    if (features->parsed()) return run_features(cfg, out_dir, signal_path, manifest_path);
    if (tr->parsed()) return run_train(cfg, out_dir, windows_path);
    if (qz->parsed()) return run_quantize(out_dir, weights_path);
    if (ev->parsed()) return run_eval(cfg, out_dir, weights_path, windows_path, threshold);
    if (mc->parsed()) return run_montecarlo(cfg, out_dir, weights_path, windows_path);
    if (pw->parsed()) return run_power(cfg, out_dir, weights_path, windows_path);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const afua::InvariantViolation& e) {
    std::cerr << "internal invariant violated: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
