#pragma once

// YAML configuration: scenarios (with variants), perception, corpus and risk-sweep
// settings. Every problem found is reported with its source line.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "coop/camera_geometry.hpp"
#include "coop/error.hpp"
#include "coop/lane_udt.hpp"
#include "coop/risk_field.hpp"
#include "coop/sim_engine.hpp"
#include "coop/sweeps.hpp"
#include "coop/synth_scene.hpp"
#include "coop/v2v_net.hpp"

namespace coop {

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  void error(const YAML::Node& at, const std::string& msg) {
    const auto mark = at.Mark();
    std::string where = source_;
    if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
    push(where + ": " + msg);
  }
  void error(const std::string& msg) { push(source_ + ": " + msg); }

  bool is_map(const YAML::Node& n, const std::string& what) {
    if (n.IsMap()) return true;
    error(n, what + " must be a mapping");
    return false;
  }

  /// Flags keys outside `allowed`.
  void keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!map.IsMap()) return;
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) error(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  bool get(const YAML::Node& map, const char* key, T& out) {
    if (!map.IsMap()) return false;
    const YAML::Node n = map[key];
    if (!n) return false;
    try {
      out = n.as<T>();
      if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(out)) error(n, std::string("'") + key + "' must be finite");
      }
      return true;
    } catch (const YAML::Exception&) {
      error(n, std::string("'") + key + "' has the wrong type");
      return false;
    }
  }

  template <typename T>
  void require(const YAML::Node& map, const char* key, T& out, const std::string& where) {
    if (!map.IsMap() || !map[key]) {
      error(map, "missing required key '" + std::string(key) + "' in " + where);
      return;
    }
    get(map, key, out);
  }

  /// Runs a validate() call, recording its message against `at`.
  template <typename F>
  void check(const YAML::Node& at, F&& validate) {
    try {
      validate();
    } catch (const Error& e) {
      error(at, e.what());
    }
  }

  const std::vector<std::string>& errors() const { return errors_; }

  void finish() const {
    if (errors_.empty()) return;
    std::string msg = "configuration errors:";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw Error(ErrorCode::ValidationError, msg);
  }

 private:
  // a base-document problem shows up once, not once per variant
  void push(std::string msg) {
    if (std::find(errors_.begin(), errors_.end(), msg) == errors_.end()) errors_.push_back(std::move(msg));
  }

  std::string source_;
  std::vector<std::string> errors_;
};

inline YAML::Node load_yaml_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ValidationError,
                path + ":" + std::to_string(e.mark.line + 1) + ": YAML syntax error: " + e.msg);
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::IoError, "cannot read " + path);
  }
}

inline YAML::Node load_yaml_string(const std::string& text, const std::string& source = "<string>") {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ValidationError,
                source + ":" + std::to_string(e.mark.line + 1) + ": YAML syntax error: " + e.msg);
  }
}

/// Overlay wins; mappings merge recursively, anything else is replaced.
inline YAML::Node deep_merge(const YAML::Node& base, const YAML::Node& overlay) {
  if (!base.IsMap() || !overlay.IsMap()) return overlay;
  YAML::Node out(YAML::NodeType::Map);
  for (const auto& kv : base) out[kv.first.as<std::string>()] = kv.second;
  for (const auto& kv : overlay) {
    const auto key = kv.first.as<std::string>();
    out[key] = (base[key] && base[key].IsMap() && kv.second.IsMap()) ? deep_merge(base[key], kv.second) : kv.second;
  }
  return out;
}

// ---- section readers ----

inline void read_calibration(ConfigReader& r, const YAML::Node& n, CameraCalibration& c) {
  if (!n) return;
  if (!r.is_map(n, "calibration")) return;
  r.keys(n, {"fu", "fv", "cu", "cv", "h", "pitch", "yaw"}, "calibration");
  r.get(n, "fu", c.fu);
  r.get(n, "fv", c.fv);
  r.get(n, "cu", c.cu);
  r.get(n, "cv", c.cv);
  r.get(n, "h", c.h);
  r.get(n, "pitch", c.pitch);
  r.get(n, "yaw", c.yaw);
  r.check(n, [&] { c.validate(); });
}

inline void read_detect(ConfigReader& r, const YAML::Node& n, DetectConfig& d) {
  if (!n) return;
  if (!r.is_map(n, "detect")) return;
  r.keys(n, {"grid", "static_roi", "dynamic_roi", "speed", "lane_change_signal", "lane_offset", "marking_width",
             "filter_theta", "threshold", "ransac", "max_lanes", "yellow_chroma"},
         "detect");
  if (const auto g = n["grid"]; g && r.is_map(g, "detect.grid")) {
    r.keys(g, {"x_min", "x_max", "y_min", "y_max", "resolution"}, "detect.grid");
    r.get(g, "x_min", d.grid.x_min);
    r.get(g, "x_max", d.grid.x_max);
    r.get(g, "y_min", d.grid.y_min);
    r.get(g, "y_max", d.grid.y_max);
    r.get(g, "resolution", d.grid.resolution);
    r.check(g, [&] { d.grid.validate(); });
  }
  if (const auto s = n["static_roi"]; s && r.is_map(s, "detect.static_roi")) {
    r.keys(s, {"k", "l", "dy_frac"}, "detect.static_roi");
    r.get(s, "k", d.static_k);
    r.get(s, "l", d.static_l);
    r.get(s, "dy_frac", d.static_dy_frac);
  }
  if (const auto s = n["dynamic_roi"]; s && r.is_map(s, "detect.dynamic_roi")) {
    r.keys(s, {"width", "height", "a", "b", "height_min", "height_max", "width_gain", "a_gain"}, "detect.dynamic_roi");
    r.get(s, "width", d.roi.width_px);
    r.get(s, "height", d.roi.height_px);
    r.get(s, "a", d.roi.deviation_coeff);
    r.get(s, "b", d.roi.speed_coeff);
    r.get(s, "height_min", d.roi.height_min_px);
    r.get(s, "height_max", d.roi.height_max_px);
    r.get(s, "width_gain", d.roi_update.lane_change_width_gain);
    r.get(s, "a_gain", d.roi_update.lane_change_deviation_gain);
    if (!(d.roi.width_px > 0) || !(d.roi.height_min_px > 0) || d.roi.height_max_px < d.roi.height_min_px) {
      r.error(s, "dynamic ROI sizes are invalid");
    }
  }
  r.get(n, "speed", d.speed);
  r.get(n, "lane_change_signal", d.lane_change_signal);
  r.get(n, "lane_offset", d.lane_offset);
  r.get(n, "marking_width", d.marking_width);
  r.get(n, "filter_theta", d.filter_theta);
  if (const auto t = n["threshold"]; t && r.is_map(t, "detect.threshold")) {
    r.keys(t, {"column_k", "pixel_k", "max_gap_cols", "min_cluster_peak"}, "detect.threshold");
    r.get(t, "column_k", d.threshold.column_k);
    r.get(t, "pixel_k", d.threshold.pixel_k);
    r.get(t, "max_gap_cols", d.threshold.max_gap_cols);
    r.get(t, "min_cluster_peak", d.threshold.min_cluster_peak);
  }
  if (const auto q = n["ransac"]; q && r.is_map(q, "detect.ransac")) {
    r.keys(q, {"iterations", "accept_s", "min_pixel_consistency", "band_cells", "likelihood_bins", "seed", "weights"},
           "detect.ransac");
    r.get(q, "iterations", d.ransac.iterations);
    r.get(q, "accept_s", d.ransac.accept_s);
    r.get(q, "min_pixel_consistency", d.ransac.min_pixel_consistency);
    r.get(q, "band_cells", d.ransac.band_cells);
    r.get(q, "likelihood_bins", d.ransac.likelihood_bins);
    r.get(q, "seed", d.ransac.seed);
    if (const auto w = q["weights"]; w && r.is_map(w, "detect.ransac.weights")) {
      r.keys(w, {"k1", "k2", "kL", "kQ"}, "detect.ransac.weights");
      r.get(w, "k1", d.ransac.weights.k1);
      r.get(w, "k2", d.ransac.weights.k2);
      r.get(w, "kL", d.ransac.weights.kL);
      r.get(w, "kQ", d.ransac.weights.kQ);
      r.check(w, [&] { d.ransac.weights.validate(); });
    }
    if (d.ransac.iterations < 1) r.error(q, "ransac.iterations must be >= 1");
  }
  r.get(n, "max_lanes", d.max_lanes);
  r.get(n, "yellow_chroma", d.yellow_chroma);
  if (!(d.marking_width > 0)) r.error(n, "marking_width must be positive");
  if (d.max_lanes < 0 || d.max_lanes > 4) r.error(n, "max_lanes must be in [0, 4]");
}

inline void read_corpus(ConfigReader& r, const YAML::Node& n, CorpusSpec& c) {
  if (!n) return;
  if (!r.is_map(n, "corpus")) return;
  r.keys(n, {"frames", "seed", "lane_width_min", "lane_width_max", "ego_offset_max", "heading_max", "curved_fraction",
             "radius_min", "radius_max", "sigma_min", "sigma_max", "shadow_bands_max", "gap_fraction_max",
             "gradient_max"},
         "corpus");
  r.get(n, "frames", c.frames);
  r.get(n, "seed", c.seed);
  r.get(n, "lane_width_min", c.lane_width_min);
  r.get(n, "lane_width_max", c.lane_width_max);
  r.get(n, "ego_offset_max", c.ego_offset_max);
  r.get(n, "heading_max", c.heading_max);
  r.get(n, "curved_fraction", c.curved_fraction);
  r.get(n, "radius_min", c.radius_min);
  r.get(n, "radius_max", c.radius_max);
  r.get(n, "sigma_min", c.sigma_min);
  r.get(n, "sigma_max", c.sigma_max);
  r.get(n, "shadow_bands_max", c.shadow_bands_max);
  r.get(n, "gap_fraction_max", c.gap_fraction_max);
  r.get(n, "gradient_max", c.gradient_max);
  if (c.frames < 0) r.error(n, "corpus.frames must be non-negative");
  if (c.sigma_min < 0 || c.sigma_max < c.sigma_min) r.error(n, "corpus noise sigma range is invalid");
  if (c.gap_fraction_max < 0 || c.gap_fraction_max >= 1) r.error(n, "corpus.gap_fraction_max must be in [0, 1)");
  if (c.lane_width_min <= 0 || c.lane_width_max < c.lane_width_min) r.error(n, "corpus lane width range is invalid");
}

inline void read_risk(ConfigReader& r, const YAML::Node& n, RiskConfig& rc) {
  if (!n) return;
  if (!r.is_map(n, "risk")) return;
  r.keys(n, {"field", "area", "thresholds", "integration", "preview"}, "risk");
  if (const auto f = n["field"]; f && r.is_map(f, "risk.field")) {
    r.keys(f, {"sigma_x", "r_a", "r_c", "sigma_y_max"}, "risk.field");
    r.get(f, "sigma_x", rc.field.sigma_x);
    r.get(f, "r_a", rc.field.r_a);
    r.get(f, "r_c", rc.field.r_c);
    r.get(f, "sigma_y_max", rc.field.sigma_y_max);
    r.check(f, [&] { rc.field.validate(); });
  }
  if (const auto a = n["area"]; a && r.is_map(a, "risk.area")) {
    r.keys(a, {"length", "width"}, "risk.area");
    double len = rc.area.half_extent_x * 2, wid = rc.area.half_extent_y * 2;
    r.get(a, "length", len);
    r.get(a, "width", wid);
    rc.area = ConflictArea::sized(len, wid);
    r.check(a, [&] { rc.area.validate(); });
  }
  if (const auto t = n["thresholds"]; t && r.is_map(t, "risk.thresholds")) {
    r.keys(t, {"reminding", "warning"}, "risk.thresholds");
    r.get(t, "reminding", rc.thresholds.reminding);
    r.get(t, "warning", rc.thresholds.warning);
    r.check(t, [&] { rc.thresholds.validate(); });
  }
  if (const auto i = n["integration"]; i && r.is_map(i, "risk.integration")) {
    r.keys(i, {"nodes", "tolerance", "max_refinements", "clip_sigmas"}, "risk.integration");
    r.get(i, "nodes", rc.integration.nodes);
    r.get(i, "tolerance", rc.integration.tolerance);
    r.get(i, "max_refinements", rc.integration.max_refinements);
    r.get(i, "clip_sigmas", rc.integration.clip_sigmas);
    r.check(i, [&] { rc.integration.validate(); });
  }
  if (const auto p = n["preview"]; p && r.is_map(p, "risk.preview")) {
    r.keys(p, {"horizon", "step"}, "risk.preview");
    r.get(p, "horizon", rc.preview_horizon);
    r.get(p, "step", rc.preview_step);
    if (!(rc.preview_horizon >= 0) || !(rc.preview_step > 0)) r.error(p, "preview horizon must be >= 0 and step > 0");
  }
}

inline void read_channel(ConfigReader& r, const YAML::Node& n, ChannelModel& ch) {
  if (!n) return;
  if (!r.is_map(n, "channel")) return;
  r.keys(n, {"range", "period_ms", "loss_prob", "latency_ms", "seed"}, "channel");
  r.get(n, "range", ch.range);
  r.get(n, "period_ms", ch.period_ms);
  r.get(n, "loss_prob", ch.loss_prob);
  r.get(n, "latency_ms", ch.latency_ms);
  r.get(n, "seed", ch.seed);
  r.check(n, [&] { ch.validate(); });
}

inline void read_vehicle(ConfigReader& r, const YAML::Node& n, VehicleSpec& v) {
  if (!r.is_map(n, "vehicle entry")) return;
  r.keys(n, {"id", "lane", "s", "speed", "speed_kmh", "length", "width", "oncoming", "speed_changes"}, "vehicle");
  r.require(n, "id", v.id, "vehicle");
  r.require(n, "lane", v.lane, "vehicle");
  r.get(n, "s", v.s);
  double kmh = 0;
  const bool has_ms = r.get(n, "speed", v.speed);
  if (r.get(n, "speed_kmh", kmh)) {
    if (has_ms) r.error(n, "give either speed or speed_kmh, not both");
    v.speed = kmh / 3.6;
  }
  r.get(n, "length", v.length);
  r.get(n, "width", v.width);
  r.get(n, "oncoming", v.oncoming);
  if (const auto sc = n["speed_changes"]) {
    if (!sc.IsSequence()) {
      r.error(sc, "speed_changes must be a list");
    } else {
      for (const auto& c : sc) {
        if (!r.is_map(c, "speed change")) continue;
        r.keys(c, {"t", "speed", "speed_kmh"}, "speed change");
        SpeedChange ch;
        r.require(c, "t", ch.t, "speed change");
        double k = 0;
        if (r.get(c, "speed_kmh", k)) ch.speed = k / 3.6;
        else r.require(c, "speed", ch.speed, "speed change");
        v.speed_changes.push_back(ch);
      }
    }
  }
  if (!(v.speed >= 0 && v.speed <= VehicleState::kMaxSpeed)) r.error(n, "vehicle speed outside [0, 35] m/s");
}

inline Scenario read_scenario_node(ConfigReader& r, const YAML::Node& n, const std::string& name) {
  Scenario sc;
  sc.name = name;
  if (!r.is_map(n, "scenario")) return sc;
  r.keys(n, {"name", "seed", "dt_ms", "duration", "road", "ego", "vehicles", "maneuver", "channel", "risk",
             "perception", "gate", "variants"},
         "scenario");
  r.get(n, "seed", sc.seed);
  sc.channel.seed = sc.seed;
  r.get(n, "dt_ms", sc.dt_ms);
  r.get(n, "duration", sc.duration);
  if (const auto road = n["road"]; road && r.is_map(road, "road")) {
    r.keys(road, {"lanes", "lane_width", "radius"}, "road");
    r.get(road, "lanes", sc.road.lanes);
    r.get(road, "lane_width", sc.road.lane_width);
    r.get(road, "radius", sc.road.radius);
    r.check(road, [&] { sc.road.validate(); });
  }
  const auto vehicles = n["vehicles"];
  if (!vehicles) {
    r.error(n, "missing required key 'vehicles' in scenario");
  } else if (!vehicles.IsSequence()) {
    r.error(vehicles, "vehicles must be a list");
  } else {
    for (const auto& v : vehicles) {
      VehicleSpec spec;
      read_vehicle(r, v, spec);
      if (spec.lane < 0 || spec.lane >= sc.road.lanes) r.error(v, "vehicle lane outside the road");
      sc.vehicles.push_back(spec);
    }
  }
  sc.ego_id = sc.vehicles.empty() ? 0 : sc.vehicles.front().id;
  r.get(n, "ego", sc.ego_id);
  if (const auto m = n["maneuver"]; m && !m.IsNull() && r.is_map(m, "maneuver")) {
    r.keys(m, {"start_time", "target_lane", "duration", "mode", "return_margin", "return"}, "maneuver");
    ManeuverSpec ms;
    r.require(m, "start_time", ms.start_time, "maneuver");
    r.require(m, "target_lane", ms.target_lane, "maneuver");
    r.get(m, "duration", ms.duration);
    std::string mode = "forced";
    r.get(m, "mode", mode);
    if (mode == "forced") ms.mode = ManeuverMode::Forced;
    else if (mode == "gated") ms.mode = ManeuverMode::Gated;
    else r.error(m["mode"], "maneuver.mode must be 'forced' or 'gated'");
    r.get(m, "return_margin", ms.return_margin);
    r.get(m, "return", ms.return_to_origin);
    sc.maneuver = ms;
  }
  read_channel(r, n["channel"], sc.channel);
  read_risk(r, n["risk"], sc.risk);
  if (const auto p = n["perception"]; p && r.is_map(p, "perception")) {
    r.keys(p, {"mode", "every_ticks", "noise_sigma", "calibration", "detect"}, "perception");
    std::string mode = "truth";
    r.get(p, "mode", mode);
    if (mode == "truth") sc.perception.mode = PerceptionMode::Truth;
    else if (mode == "camera") sc.perception.mode = PerceptionMode::Camera;
    else r.error(p["mode"], "perception.mode must be 'truth' or 'camera'");
    r.get(p, "every_ticks", sc.perception.every_ticks);
    r.get(p, "noise_sigma", sc.perception.noise_sigma);
    read_calibration(r, p["calibration"], sc.perception.calib);
    read_detect(r, p["detect"], sc.perception.detect);
  }
  if (const auto g = n["gate"]; g && r.is_map(g, "gate")) {
    r.keys(g, {"behind", "ahead"}, "gate");
    r.get(g, "behind", sc.gate.behind);
    r.get(g, "ahead", sc.gate.ahead);
  }
  if (r.errors().empty()) {
    for (const auto& v : sc.violations()) r.error(n, v);
  }
  return sc;
}

/// The base scenario, or one scenario per variant when variants are listed. Each
/// variant is deep-merged over the base document.
inline std::vector<Scenario> read_scenarios(const YAML::Node& doc, const std::string& source) {
  ConfigReader r(source);
  std::vector<Scenario> out;
  if (!doc || !doc.IsMap()) {
    r.error(doc, "scenario file must be a mapping");
    r.finish();
  }
  std::string base_name = std::filesystem::path(source).stem().string();
  r.get(doc, "name", base_name);
  const auto variants = doc["variants"];
  if (!variants) {
    out.push_back(read_scenario_node(r, doc, base_name));
  } else if (!variants.IsSequence() || variants.size() == 0) {
    r.error(variants, "variants must be a non-empty list");
  } else {
    YAML::Node base(YAML::NodeType::Map);
    for (const auto& kv : doc) {
      if (kv.first.as<std::string>() != "variants") base[kv.first.as<std::string>()] = kv.second;
    }
    std::set<std::string> names;
    for (const auto& v : variants) {
      if (!r.is_map(v, "variant")) continue;
      std::string vname;
      r.require(v, "name", vname, "variant");
      if (!names.insert(vname).second) r.error(v, "duplicate variant name '" + vname + "'");
      YAML::Node overlay(YAML::NodeType::Map);
      for (const auto& kv : v) {
        const auto key = kv.first.as<std::string>();
        if (key == "variants") r.error(kv.first, "'variants' is not allowed inside a variant");
        else if (key != "name") overlay[key] = kv.second;
      }
      out.push_back(read_scenario_node(r, deep_merge(base, overlay), base_name + "_" + vname));
    }
  }
  r.finish();
  return out;
}

inline std::vector<Scenario> load_scenarios(const std::string& path) {
  return read_scenarios(load_yaml_file(path), path);
}

/// detect/render configuration file: calibration, detect, corpus.
struct PerceptionConfig {
  CameraCalibration calib;
  DetectConfig detect;
  CorpusSpec corpus;
};

inline PerceptionConfig read_perception_config(const YAML::Node& doc, const std::string& source) {
  ConfigReader r(source);
  PerceptionConfig pc;
  if (doc && !doc.IsNull()) {
    if (r.is_map(doc, "configuration")) {
      r.keys(doc, {"calibration", "detect", "corpus"}, "configuration");
      read_calibration(r, doc["calibration"], pc.calib);
      read_detect(r, doc["detect"], pc.detect);
      read_corpus(r, doc["corpus"], pc.corpus);
    }
  }
  pc.corpus.calib = pc.calib;
  r.finish();
  return pc;
}

/// risk-sweep configuration file: risk, area_sweep, mode_sweep.
struct SweepConfig {
  RiskConfig risk;
  AreaSweepConfig area;
  ModeSweepConfig modes;
};

inline SweepConfig read_sweep_config(const YAML::Node& doc, const std::string& source) {
  ConfigReader r(source);
  SweepConfig sc;
  if (doc && !doc.IsNull() && r.is_map(doc, "configuration")) {
    r.keys(doc, {"risk", "area_sweep", "mode_sweep"}, "configuration");
    read_risk(r, doc["risk"], sc.risk);
    if (const auto a = doc["area_sweep"]; a && r.is_map(a, "area_sweep")) {
      r.keys(a, {"lengths", "width", "lead_speed_kmh", "overtaker_speed_kmh", "initial_gap", "maneuver_start",
                 "duration"},
             "area_sweep");
      if (a["lengths"]) {
        if (!a["lengths"].IsSequence()) r.error(a["lengths"], "area_sweep.lengths must be a list");
        else r.get(a, "lengths", sc.area.lengths);
      }
      r.get(a, "width", sc.area.width);
      double kmh = 0;
      if (r.get(a, "lead_speed_kmh", kmh)) sc.area.lead_speed = kmh / 3.6;
      if (r.get(a, "overtaker_speed_kmh", kmh)) sc.area.overtaker_speed = kmh / 3.6;
      r.get(a, "initial_gap", sc.area.initial_gap);
      r.get(a, "maneuver_start", sc.area.maneuver_start);
      r.get(a, "duration", sc.area.duration);
      r.check(a, [&] { sc.area.validate(); });
    }
    if (const auto m = doc["mode_sweep"]; m && r.is_map(m, "mode_sweep")) {
      r.keys(m, {"modes", "closing_speed_kmh", "lead_speed_kmh", "contact_time", "dt", "area_length", "area_width"},
             "mode_sweep");
      if (const auto list = m["modes"]) {
        if (!list.IsSequence()) {
          r.error(list, "mode_sweep.modes must be a list");
        } else {
          sc.modes.modes.clear();
          for (const auto& e : list) {
            if (!r.is_map(e, "mode")) continue;
            r.keys(e, {"label", "approach_deg"}, "mode");
            CollisionMode cm;
            r.require(e, "label", cm.label, "mode");
            r.require(e, "approach_deg", cm.approach_deg, "mode");
            sc.modes.modes.push_back(cm);
          }
        }
      }
      double kmh = 0;
      if (r.get(m, "closing_speed_kmh", kmh)) sc.modes.closing_speed = kmh / 3.6;
      if (r.get(m, "lead_speed_kmh", kmh)) sc.modes.lead_speed = kmh / 3.6;
      r.get(m, "contact_time", sc.modes.contact_time);
      r.get(m, "dt", sc.modes.dt);
      r.get(m, "area_length", sc.modes.area_length);
      r.get(m, "area_width", sc.modes.area_width);
      r.check(m, [&] { sc.modes.validate(); });
    }
  }
  r.finish();
  return sc;
}

}  // namespace coop
