#pragma once

// File formats. JSON for structured artifacts (weights, windows, reports,
// run configuration), plain two-column text with '#' headers for signals and
// scatter traces so they drop straight into gnuplot. Weight and window files
// round-trip bit exactly (JSON doubles are serialized shortest-round-trip),
// and every artifact carries the hash of the run configuration that produced
// it.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "afua/circuit.hpp"
#include "afua/common.hpp"
#include "afua/core.hpp"
#include "afua/dsp.hpp"
#include "afua/netsim.hpp"
#include "afua/synthgen.hpp"
#include "afua/trainer.hpp"

namespace afua::io {

using json = nlohmann::json;
using core::Mat;
using core::Vec;

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---- tensors ----

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const net::MatI& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const net::VecI& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Mat mat_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw std::runtime_error("weights: tensor '" + name + "' must be a 2-d array");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw std::runtime_error("weights: ragged tensor '" + name + "'");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Vec vec_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw std::runtime_error("weights: tensor '" + name + "' must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

inline net::MatI mati_from_json(const json& j, const std::string& name) {
  const Mat m = mat_from_json(j, name);
  return m.cast<int>();
}

inline net::VecI veci_from_json(const json& j, const std::string& name) {
  const Vec v = vec_from_json(j, name);
  return v.cast<int>();
}

// ---- feature scale ----

inline json to_json(const dsp::FeatureScale& s) {
  return {{"x0_offset", s.x0_offset},
          {"x0_scale", s.x0_scale},
          {"x1_offset", s.x1_offset},
          {"x1_scale", s.x1_scale}};
}

inline dsp::FeatureScale feature_scale_from_json(const json& j) {
  dsp::FeatureScale s;
  s.x0_offset = j.at("x0_offset").get<double>();
  s.x0_scale = j.at("x0_scale").get<double>();
  s.x1_offset = j.at("x1_offset").get<double>();
  s.x1_scale = j.at("x1_scale").get<double>();
  return s;
}

// ---- weights ----

constexpr int kWeightsFormatVersion = 1;

struct WeightsFile {
  bool quantized = false;
  core::ModelParams params;      // set when !quantized
  net::QuantizedParams qparams;  // set when quantized
  dsp::FeatureScale scale;
  std::string config_hash;
};

inline void save_weights(const std::string& path, const core::ModelParams& p,
                         const dsp::FeatureScale& scale, const std::string& config_hash) {
  json j;
  j["format_version"] = kWeightsFormatVersion;
  j["kind"] = "full_precision";
  j["units"] = p.units();
  j["inputs"] = p.inputs();
  j["tensors"] = {{"W", to_json(p.W)},  {"Wz", to_json(p.Wz)}, {"U", to_json(p.U)},
                  {"Uz", to_json(p.Uz)}, {"b", to_json(p.b)},  {"bz", to_json(p.bz)}};
  j["feature_scale"] = to_json(scale);
  j["config_hash"] = config_hash;
  write_json_file(path, j);
}

inline void save_weights(const std::string& path, const net::QuantizedParams& q,
                         const dsp::FeatureScale& scale, const std::string& config_hash) {
  json j;
  j["format_version"] = kWeightsFormatVersion;
  j["kind"] = "quantized";
  j["units"] = q.units();
  j["inputs"] = q.inputs();
  j["tensors"] = {{"W", to_json(q.W)},  {"Wz", to_json(q.Wz)}, {"U", to_json(q.U)},
                  {"Uz", to_json(q.Uz)}, {"b", to_json(q.b)},  {"bz", to_json(q.bz)}};
  j["feature_scale"] = to_json(scale);
  j["config_hash"] = config_hash;
  write_json_file(path, j);
}

inline WeightsFile load_weights(const std::string& path) {
  const json j = parse_json_file(path);
  if (j.at("format_version").get<int>() != kWeightsFormatVersion) {
    throw std::runtime_error(path + ": unsupported weights format version");
  }
  WeightsFile w;
  const std::string kind = j.at("kind").get<std::string>();
  const json& t = j.at("tensors");
  if (kind == "full_precision") {
    w.quantized = false;
    w.params.W = mat_from_json(t.at("W"), "W");
    w.params.Wz = mat_from_json(t.at("Wz"), "Wz");
    w.params.U = mat_from_json(t.at("U"), "U");
    w.params.Uz = mat_from_json(t.at("Uz"), "Uz");
    w.params.b = vec_from_json(t.at("b"), "b");
    w.params.bz = vec_from_json(t.at("bz"), "bz");
    w.params.check_shapes();
  } else if (kind == "quantized") {
    w.quantized = true;
    w.qparams.W = mati_from_json(t.at("W"), "W");
    w.qparams.Wz = mati_from_json(t.at("Wz"), "Wz");
    w.qparams.U = mati_from_json(t.at("U"), "U");
    w.qparams.Uz = mati_from_json(t.at("Uz"), "Uz");
    w.qparams.b = veci_from_json(t.at("b"), "b");
    w.qparams.bz = veci_from_json(t.at("bz"), "bz");
    w.qparams.check_shapes();
  } else {
    throw std::runtime_error(path + ": unknown weights kind '" + kind + "'");
  }
  if (j.contains("feature_scale")) w.scale = feature_scale_from_json(j.at("feature_scale"));
  if (j.contains("config_hash")) w.config_hash = j.at("config_hash").get<std::string>();
  return w;
}

// ---- feature windows ----

constexpr int kWindowsFormatVersion = 1;

struct WindowsFile {
  std::vector<dsp::WindowSample> windows;
  double feature_rate = 10.0;
  double window_seconds = 24.0;
  std::string config_hash;
};

inline void save_windows(const std::string& path, const std::vector<dsp::WindowSample>& ws,
                         double feature_rate, double window_seconds,
                         const std::string& config_hash) {
  json j;
  j["format_version"] = kWindowsFormatVersion;
  j["feature_rate"] = feature_rate;
  j["window_seconds"] = window_seconds;
  j["config_hash"] = config_hash;
  json arr = json::array();
  for (const dsp::WindowSample& w : ws) {
    json frames = json::array();
    for (const dsp::FeatureFrame& f : w.frames) frames.push_back({f.t, f.x0, f.x1});
    arr.push_back({{"label", label_name(w.label)}, {"frames", std::move(frames)}});
  }
  j["windows"] = std::move(arr);
  write_json_file(path, j);
}

inline Label label_from_name(const std::string& s) {
  if (s == "chewing") return Label::chewing;
  if (s == "not_chewing") return Label::not_chewing;
  throw std::runtime_error("unknown label '" + s + "'");
}

inline WindowsFile load_windows(const std::string& path) {
  const json j = parse_json_file(path);
  if (j.at("format_version").get<int>() != kWindowsFormatVersion) {
    throw std::runtime_error(path + ": unsupported windows format version");
  }
  WindowsFile out;
  out.feature_rate = j.at("feature_rate").get<double>();
  out.window_seconds = j.at("window_seconds").get<double>();
  if (j.contains("config_hash")) out.config_hash = j.at("config_hash").get<std::string>();
  for (const json& wj : j.at("windows")) {
    dsp::WindowSample w;
    w.label = label_from_name(wj.at("label").get<std::string>());
    for (const json& fj : wj.at("frames")) {
      if (!fj.is_array() || fj.size() != 3) {
        throw std::runtime_error(path + ": frame entries must be [t, x0, x1]");
      }
      w.frames.push_back({fj[0].get<double>(), fj[1].get<double>(), fj[2].get<double>()});
    }
    if (w.frames.empty()) throw std::runtime_error(path + ": empty window");
    out.windows.push_back(std::move(w));
  }
  return out;
}

// ---- two-column text ----

namespace detail {
inline void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}
}  // namespace detail

inline void save_signal(const std::string& path, const dsp::SignalBuffer& s,
                        const std::string& config_hash) {
  std::string out;
  out.reserve(s.samples.size() * 28 + 128);
  out += "# signal\n# sample_rate ";
  detail::append_double(out, s.sample_rate);
  out += "\n# samples " + std::to_string(s.samples.size());
  out += "\n# config_hash " + config_hash + "\n";
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    detail::append_double(out, i / s.sample_rate);
    out += ' ';
    detail::append_double(out, s.samples[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

inline dsp::SignalBuffer load_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  dsp::SignalBuffer s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "sample_rate") hs >> s.sample_rate;
      continue;
    }
    const char* p = line.c_str();
    char* end = nullptr;
    std::strtod(p, &end);  // time column, redundant with the index
    if (end == p) throw std::runtime_error(path + ": malformed line: " + line);
    const char* p2 = end;
    const double v = std::strtod(p2, &end);
    if (end == p2) throw std::runtime_error(path + ": malformed line: " + line);
    s.samples.push_back(v);
  }
  if (s.sample_rate <= 0.0) throw std::runtime_error(path + ": missing '# sample_rate' header");
  if (s.samples.empty()) throw std::runtime_error(path + ": no samples");
  return s;
}

inline void save_manifest(const std::string& path, const std::vector<dsp::Segment>& segs,
                          const std::string& config_hash) {
  std::string out = "# segments: start end kind\n# config_hash " + config_hash + "\n";
  for (const dsp::Segment& seg : segs) {
    detail::append_double(out, seg.start);
    out += ' ';
    detail::append_double(out, seg.end);
    out += ' ';
    out += seg.kind;
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<dsp::Segment> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<dsp::Segment> segs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    dsp::Segment seg;
    if (!(ls >> seg.start >> seg.end >> seg.kind)) {
      throw std::runtime_error(path + ": malformed segment line: " + line);
    }
    segs.push_back(std::move(seg));
  }
  if (segs.empty()) throw std::runtime_error(path + ": no segments");
  return segs;
}

// Generic two-column trace (e.g. ROC points, current scatter).
inline void save_xy(const std::string& path, const std::vector<std::pair<double, double>>& xy,
                    const std::string& header) {
  std::string out = "# " + header + "\n";
  for (const auto& [x, y] : xy) {
    detail::append_double(out, x);
    out += ' ';
    detail::append_double(out, y);
    out += '\n';
  }
  write_text_file(path, out);
}

// ---- reports ----

inline json to_json(const net::ConfusionMetrics& m) {
  json j;
  j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}};
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision ? json(*m.precision) : json(nullptr);
  j["recall"] = m.recall ? json(*m.recall) : json(nullptr);
  j["f1"] = m.f1 ? json(*m.f1) : json(nullptr);
  return j;
}

inline json to_json(const net::RocCurve& roc) {
  json pts = json::array();
  for (const net::RocPoint& p : roc.points) {
    pts.push_back({{"threshold", p.threshold},
                   {"sensitivity", p.sensitivity},
                   {"specificity", p.specificity}});
  }
  return {{"auc", roc.auc}, {"points", std::move(pts)}};
}

// Wall-clock time is console output only; serialized reports must be
// byte-identical across reruns.
inline json to_json(const train::TrainReport& r, const train::SplitIndices& split) {
  json epochs = json::array();
  for (const train::EpochStats& e : r.epochs) {
    epochs.push_back({{"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"valid_loss", e.valid_loss},
                      {"valid_acc", e.valid_acc}});
  }
  json j;
  j["best_epoch"] = r.best_epoch;
  j["best_valid_loss"] = r.best_valid_loss;
  j["diverged"] = r.diverged;
  j["divergence_note"] = r.divergence_note;
  j["epochs"] = std::move(epochs);
  j["split"] = {{"train", split.train}, {"valid", split.valid}, {"test", split.test}};
  return j;
}

inline json to_json(const circuit::BlockCurrents& b) {
  return {{"activation", b.activation},
          {"filter", b.filter},
          {"soma", b.soma},
          {"vmm", b.vmm},
          {"total", b.total()}};
}

inline json to_json(const circuit::PowerReport& r) {
  json j;
  j["mean_units"] = to_json(r.mean);
  j["worst_units"] = to_json(r.worst);
  j["worst_total_units"] = r.worst_total_units;
  j["bound_units"] = r.eq_bound_units;
  j["nominal_bound_exceedances"] = r.nominal_bound_exceedances;
  j["mean_total_units"] = r.mean_total_units;
  j["mean_power_watts"] = r.mean_power_watts;
  return j;
}

inline json to_json(const circuit::SystemPowerReport& r) {
  return {{"active_fraction", r.active_fraction},
          {"frontend_W", r.frontend_W},
          {"mcu_avg_W", r.mcu_avg_W},
          {"total_avg_W", r.total_avg_W}};
}

inline json to_json(const circuit::MonteCarloResult& r) {
  json runs = json::array();
  for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
    runs.push_back({{"accuracy", r.accuracies[i]},
                    {"vdd", r.corners[i].first},
                    {"temperature", r.corners[i].second}});
  }
  json j;
  j["nominal_accuracy"] = r.nominal_accuracy;
  j["median_accuracy"] = r.median_accuracy;
  j["runs"] = std::move(runs);
  return j;
}

// ---- run configuration ----

struct RunConfig {
  synth::GenConfig gen;
  double total_duration = 4800.0;  // s of generated signal
  double window_seconds = 24.0;
  dsp::FeatureConfig features;
  double hp_cutoff = 0.5;       // Hz; 0 disables the drift filter
  double resample_rate = 500.0; // Hz; 0 keeps the input rate
  train::TrainConfig train;
  circuit::CircuitConfig circuit;
  circuit::MonteCarloConfig mc;
  circuit::SystemPowerInputs power;
  int roc_thresholds = 256;
};

namespace detail {

// user-supplied configuration, so failures are runtime (input) errors
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw std::runtime_error("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
  RunConfig c;
  detail::check_keys(j, {"gen", "dataset", "features", "train", "circuit", "mc", "power", "eval"},
                     "top level");
  if (j.contains("gen")) {
    const json& g = j.at("gen");
    detail::check_keys(g,
                       {"sample_rate", "chew_rate", "chew_rate_jitter", "burst_freq",
                        "burst_decay", "amplitude", "noise_floor", "talk_interval",
                        "talk_interval_cv", "talk_freq_lo", "talk_freq_hi", "cough_spacing",
                        "segment_length", "seed"},
                       "gen");
    detail::get_if(g, "sample_rate", c.gen.sample_rate);
    detail::get_if(g, "chew_rate", c.gen.chew_rate);
    detail::get_if(g, "chew_rate_jitter", c.gen.chew_rate_jitter);
    detail::get_if(g, "burst_freq", c.gen.burst_freq);
    detail::get_if(g, "burst_decay", c.gen.burst_decay);
    detail::get_if(g, "amplitude", c.gen.amplitude);
    detail::get_if(g, "noise_floor", c.gen.noise_floor);
    detail::get_if(g, "talk_interval", c.gen.talk_interval);
    detail::get_if(g, "talk_interval_cv", c.gen.talk_interval_cv);
    detail::get_if(g, "talk_freq_lo", c.gen.talk_freq_lo);
    detail::get_if(g, "talk_freq_hi", c.gen.talk_freq_hi);
    detail::get_if(g, "cough_spacing", c.gen.cough_spacing);
    detail::get_if(g, "segment_length", c.gen.segment_length);
    detail::get_if(g, "seed", c.gen.seed);
  }
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    detail::check_keys(d, {"total_duration", "window_seconds"}, "dataset");
    detail::get_if(d, "total_duration", c.total_duration);
    detail::get_if(d, "window_seconds", c.window_seconds);
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    detail::check_keys(f,
                       {"tau_rms", "env_frame", "env_hop", "raw_frame", "hysteresis",
                        "feature_rate", "hp_cutoff", "resample_rate"},
                       "features");
    detail::get_if(f, "tau_rms", c.features.tau_rms);
    detail::get_if(f, "env_frame", c.features.env_frame);
    detail::get_if(f, "env_hop", c.features.env_hop);
    detail::get_if(f, "raw_frame", c.features.raw_frame);
    detail::get_if(f, "hysteresis", c.features.hysteresis);
    detail::get_if(f, "feature_rate", c.features.feature_rate);
    detail::get_if(f, "hp_cutoff", c.hp_cutoff);
    detail::get_if(f, "resample_rate", c.resample_rate);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    detail::check_keys(t,
                       {"learning_rate", "beta1", "beta2", "adam_eps", "epochs", "batch_size",
                        "w_pos", "w_neg", "weight_clip", "seed", "split", "normalize_features",
                        "init_weight_range", "init_bias"},
                       "train");
    detail::get_if(t, "learning_rate", c.train.learning_rate);
    detail::get_if(t, "beta1", c.train.beta1);
    detail::get_if(t, "beta2", c.train.beta2);
    detail::get_if(t, "adam_eps", c.train.adam_eps);
    detail::get_if(t, "epochs", c.train.epochs);
    detail::get_if(t, "batch_size", c.train.batch_size);
    detail::get_if(t, "w_pos", c.train.w_pos);
    detail::get_if(t, "w_neg", c.train.w_neg);
    detail::get_if(t, "weight_clip", c.train.weight_clip);
    detail::get_if(t, "seed", c.train.seed);
    detail::get_if(t, "split", c.train.split);
    detail::get_if(t, "normalize_features", c.train.normalize_features);
    detail::get_if(t, "init_weight_range", c.train.init_weight_range);
    detail::get_if(t, "init_bias", c.train.init_bias);
  }
  if (j.contains("circuit")) {
    const json& cc = j.at("circuit");
    detail::check_keys(cc, {"I_unit", "C_z", "kappa", "temperature", "V_dd"}, "circuit");
    detail::get_if(cc, "I_unit", c.circuit.I_unit);
    detail::get_if(cc, "C_z", c.circuit.C_z);
    detail::get_if(cc, "kappa", c.circuit.kappa);
    detail::get_if(cc, "temperature", c.circuit.temperature);
    detail::get_if(cc, "V_dd", c.circuit.V_dd);
  }
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    detail::check_keys(m,
                       {"n_runs", "sigma", "vdd_min", "vdd_max", "temp_min", "temp_max",
                        "seed", "substeps_per_frame"},
                       "mc");
    detail::get_if(m, "n_runs", c.mc.n_runs);
    detail::get_if(m, "sigma", c.mc.mismatch.sigma);
    detail::get_if(m, "vdd_min", c.mc.mismatch.vdd_min);
    detail::get_if(m, "vdd_max", c.mc.mismatch.vdd_max);
    detail::get_if(m, "temp_min", c.mc.mismatch.temp_min);
    detail::get_if(m, "temp_max", c.mc.mismatch.temp_max);
    detail::get_if(m, "seed", c.mc.seed);
    detail::get_if(m, "substeps_per_frame", c.mc.substeps_per_frame);
  }
  if (j.contains("power")) {
    const json& p = j.at("power");
    detail::check_keys(p,
                       {"eating_fraction", "sensitivity", "specificity", "p_feature_W",
                        "p_network_W", "p_mcu_active_W", "p_mcu_standby_W"},
                       "power");
    detail::get_if(p, "eating_fraction", c.power.eating_fraction);
    detail::get_if(p, "sensitivity", c.power.sensitivity);
    detail::get_if(p, "specificity", c.power.specificity);
    detail::get_if(p, "p_feature_W", c.power.p_feature_W);
    detail::get_if(p, "p_network_W", c.power.p_network_W);
    detail::get_if(p, "p_mcu_active_W", c.power.p_mcu_active_W);
    detail::get_if(p, "p_mcu_standby_W", c.power.p_mcu_standby_W);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    detail::check_keys(e, {"roc_thresholds"}, "eval");
    detail::get_if(e, "roc_thresholds", c.roc_thresholds);
  }
  return c;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["gen"] = {{"sample_rate", c.gen.sample_rate},
              {"chew_rate", c.gen.chew_rate},
              {"chew_rate_jitter", c.gen.chew_rate_jitter},
              {"burst_freq", c.gen.burst_freq},
              {"burst_decay", c.gen.burst_decay},
              {"amplitude", c.gen.amplitude},
              {"noise_floor", c.gen.noise_floor},
              {"talk_interval", c.gen.talk_interval},
              {"talk_interval_cv", c.gen.talk_interval_cv},
              {"talk_freq_lo", c.gen.talk_freq_lo},
              {"talk_freq_hi", c.gen.talk_freq_hi},
              {"cough_spacing", c.gen.cough_spacing},
              {"segment_length", c.gen.segment_length},
              {"seed", c.gen.seed}};
  j["dataset"] = {{"total_duration", c.total_duration}, {"window_seconds", c.window_seconds}};
  j["features"] = {{"tau_rms", c.features.tau_rms},
                   {"env_frame", c.features.env_frame},
                   {"env_hop", c.features.env_hop},
                   {"raw_frame", c.features.raw_frame},
                   {"hysteresis", c.features.hysteresis},
                   {"feature_rate", c.features.feature_rate},
                   {"hp_cutoff", c.hp_cutoff},
                   {"resample_rate", c.resample_rate}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"adam_eps", c.train.adam_eps},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"w_pos", c.train.w_pos},
                {"w_neg", c.train.w_neg},
                {"weight_clip", c.train.weight_clip},
                {"seed", c.train.seed},
                {"split", c.train.split},
                {"normalize_features", c.train.normalize_features},
                {"init_weight_range", c.train.init_weight_range},
                {"init_bias", c.train.init_bias}};
  j["circuit"] = {{"I_unit", c.circuit.I_unit},
                  {"C_z", c.circuit.C_z},
                  {"kappa", c.circuit.kappa},
                  {"temperature", c.circuit.temperature},
                  {"V_dd", c.circuit.V_dd}};
  j["mc"] = {{"n_runs", c.mc.n_runs},
             {"sigma", c.mc.mismatch.sigma},
             {"vdd_min", c.mc.mismatch.vdd_min},
             {"vdd_max", c.mc.mismatch.vdd_max},
             {"temp_min", c.mc.mismatch.temp_min},
             {"temp_max", c.mc.mismatch.temp_max},
             {"seed", c.mc.seed},
             {"substeps_per_frame", c.mc.substeps_per_frame}};
  j["power"] = {{"eating_fraction", c.power.eating_fraction},
                {"sensitivity", c.power.sensitivity},
                {"specificity", c.power.specificity},
                {"p_feature_W", c.power.p_feature_W},
                {"p_network_W", c.power.p_network_W},
                {"p_mcu_active_W", c.power.p_mcu_active_W},
                {"p_mcu_standby_W", c.power.p_mcu_standby_W}};
  j["eval"] = {{"roc_thresholds", c.roc_thresholds}};
  return j;
}

// nlohmann objects keep keys sorted, so dump() is canonical for hashing.
inline std::string config_hash(const RunConfig& c) {
  return hex64(fnv1a(to_json(c).dump()));
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_json_file(path));
}

}  // namespace afua::io
