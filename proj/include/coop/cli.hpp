#pragma once

// Subcommand implementations behind tools/coopsim: detect, render, risk, simulate.
// Each returns a RunReport; the caller prints it and exits with its code.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "coop/config_io.hpp"
#include "coop/error.hpp"
#include "coop/image.hpp"
#include "coop/lane_udt.hpp"
#include "coop/sim_engine.hpp"
#include "coop/sweeps.hpp"
#include "coop/synth_scene.hpp"

namespace coop {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

inline int exit_code_for(const Error& e) { return e.code() == ErrorCode::IoError ? kExitIo : kExitValidation; }

struct RunReport {
  std::string command;
  int exit_code = kExitOk;
  Json parameters = Json::object();
  Json metrics = Json::object();
  std::vector<std::string> files, warnings, errors;

  void fail(int code, const std::string& msg) {
    exit_code = std::max(exit_code, code);
    errors.push_back(msg);
  }

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["status"] = exit_code == kExitOk ? "ok" : "error";
    j["exit_code"] = exit_code;
    j["parameters"] = parameters;
    j["metrics"] = metrics;
    j["files"] = files;
    j["warnings"] = warnings;
    j["errors"] = errors;
    return j;
  }
};

/// Flags shared by all subcommands; unset optionals keep the file values.
struct CliOptions {
  std::string config;  // YAML path; empty means built-in defaults
  std::string input;   // corpus directory (detect) or scenario file (simulate)
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> refine;  // integration grid refinements
  std::optional<int> frames;  // render only
  int jobs = 0;               // detect workers; 0 picks the hardware count
};

// ---- parameter echo ----

inline Json to_json(const CameraCalibration& c) {
  return {{"fu", c.fu}, {"fv", c.fv}, {"cu", c.cu}, {"cv", c.cv}, {"h", c.h}, {"pitch", c.pitch}, {"yaw", c.yaw}};
}

inline Json to_json(const DetectConfig& d) {
  return {
      {"grid",
       {{"x_min", d.grid.x_min},
        {"x_max", d.grid.x_max},
        {"y_min", d.grid.y_min},
        {"y_max", d.grid.y_max},
        {"resolution", d.grid.resolution}}},
      {"static_roi", {{"k", d.static_k}, {"l", d.static_l}, {"dy_frac", d.static_dy_frac}}},
      {"dynamic_roi",
       {{"width", d.roi.width_px},
        {"height", d.roi.height_px},
        {"a", d.roi.deviation_coeff},
        {"b", d.roi.speed_coeff},
        {"height_min", d.roi.height_min_px},
        {"height_max", d.roi.height_max_px},
        {"width_gain", d.roi_update.lane_change_width_gain},
        {"a_gain", d.roi_update.lane_change_deviation_gain}}},
      {"speed", d.speed},
      {"lane_change_signal", d.lane_change_signal},
      {"lane_offset", d.lane_offset},
      {"marking_width", d.marking_width},
      {"filter_theta", d.filter_theta},
      {"threshold",
       {{"column_k", d.threshold.column_k},
        {"pixel_k", d.threshold.pixel_k},
        {"max_gap_cols", d.threshold.max_gap_cols},
        {"min_cluster_peak", d.threshold.min_cluster_peak}}},
      {"ransac",
       {{"iterations", d.ransac.iterations},
        {"accept_s", d.ransac.accept_s},
        {"min_pixel_consistency", d.ransac.min_pixel_consistency},
        {"band_cells", d.ransac.band_cells},
        {"likelihood_bins", d.ransac.likelihood_bins},
        {"seed", d.ransac.seed},
        {"weights",
         {{"k1", d.ransac.weights.k1},
          {"k2", d.ransac.weights.k2},
          {"kL", d.ransac.weights.kL},
          {"kQ", d.ransac.weights.kQ}}}}},
      {"max_lanes", d.max_lanes},
      {"yellow_chroma", d.yellow_chroma},
  };
}

inline Json to_json(const CorpusSpec& c) {
  return {{"frames", c.frames},
          {"seed", c.seed},
          {"lane_width_min", c.lane_width_min},
          {"lane_width_max", c.lane_width_max},
          {"ego_offset_max", c.ego_offset_max},
          {"heading_max", c.heading_max},
          {"curved_fraction", c.curved_fraction},
          {"radius_min", c.radius_min},
          {"radius_max", c.radius_max},
          {"sigma_min", c.sigma_min},
          {"sigma_max", c.sigma_max},
          {"shadow_bands_max", c.shadow_bands_max},
          {"gap_fraction_max", c.gap_fraction_max},
          {"gradient_max", c.gradient_max}};
}

inline Json to_json(const RiskConfig& r) {
  return {
      {"field",
       {{"sigma_x", r.field.sigma_x},
        {"r_a", r.field.r_a},
        {"r_c", r.field.r_c},
        {"sigma_y_max", r.field.sigma_y_max}}},
      {"area", {{"length", 2 * r.area.half_extent_x}, {"width", 2 * r.area.half_extent_y}}},
      {"thresholds", {{"reminding", r.thresholds.reminding}, {"warning", r.thresholds.warning}}},
      {"integration",
       {{"nodes", r.integration.nodes},
        {"tolerance", r.integration.tolerance},
        {"max_refinements", r.integration.max_refinements},
        {"clip_sigmas", r.integration.clip_sigmas}}},
      {"preview", {{"horizon", r.preview_horizon}, {"step", r.preview_step}}},
  };
}

inline Json to_json(const ChannelModel& c) {
  return {{"range", c.range},
          {"period_ms", c.period_ms},
          {"loss_prob", c.loss_prob},
          {"latency_ms", c.latency_ms},
          {"seed", c.seed}};
}

inline Json to_json(const Scenario& sc) {
  Json vehicles = Json::array();
  for (const auto& v : sc.vehicles) {
    Json changes = Json::array();
    for (const auto& c : v.speed_changes) changes.push_back({{"t", c.t}, {"speed", c.speed}});
    vehicles.push_back({{"id", v.id},
                        {"lane", v.lane},
                        {"s", v.s},
                        {"speed", v.speed},
                        {"length", v.length},
                        {"width", v.width},
                        {"oncoming", v.oncoming},
                        {"speed_changes", changes}});
  }
  Json j{{"name", sc.name},
         {"seed", sc.seed},
         {"dt_ms", sc.dt_ms},
         {"duration", sc.duration},
         {"road", {{"lanes", sc.road.lanes}, {"lane_width", sc.road.lane_width}, {"radius", sc.road.radius}}},
         {"ego", sc.ego_id},
         {"vehicles", vehicles}};
  if (sc.maneuver) {
    const auto& m = *sc.maneuver;
    j["maneuver"] = {{"start_time", m.start_time},
                     {"target_lane", m.target_lane},
                     {"duration", m.duration},
                     {"mode", m.mode == ManeuverMode::Forced ? "forced" : "gated"},
                     {"return_margin", m.return_margin},
                     {"return", m.return_to_origin}};
  } else {
    j["maneuver"] = nullptr;
  }
  j["channel"] = to_json(sc.channel);
  j["risk"] = to_json(sc.risk);
  j["perception"] = {{"mode", sc.perception.mode == PerceptionMode::Truth ? "truth" : "camera"},
                     {"every_ticks", sc.perception.every_ticks},
                     {"noise_sigma", sc.perception.noise_sigma},
                     {"calibration", to_json(sc.perception.calib)},
                     {"detect", to_json(sc.perception.detect)}};
  j["gate"] = {{"behind", sc.gate.behind}, {"ahead", sc.gate.ahead}};
  return j;
}

inline Json to_json(const AreaSweepConfig& a) {
  return {{"lengths", a.lengths},
          {"width", a.width},
          {"lead_speed_kmh", a.lead_speed * 3.6},
          {"overtaker_speed_kmh", a.overtaker_speed * 3.6},
          {"initial_gap", a.initial_gap},
          {"maneuver_start", a.maneuver_start},
          {"duration", a.duration}};
}

inline Json to_json(const ModeSweepConfig& m) {
  Json modes = Json::array();
  for (const auto& c : m.modes) modes.push_back({{"label", c.label}, {"approach_deg", c.approach_deg}});
  return {{"modes", modes},
          {"closing_speed_kmh", m.closing_speed * 3.6},
          {"lead_speed_kmh", m.lead_speed * 3.6},
          {"contact_time", m.contact_time},
          {"dt", m.dt},
          {"area_length", m.area_length},
          {"area_width", m.area_width}};
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// ---- helpers ----

namespace detail {

inline YAML::Node load_optional(const std::string& path) {
  return path.empty() ? YAML::Node() : load_yaml_file(path);
}

inline std::ofstream open_out(const std::filesystem::path& p, RunReport& rep) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  rep.files.push_back(p.string());
  return f;
}

inline void make_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + p.string() + ": " + ec.message());
}

}  // namespace detail

/// True when some in-view truth marking has no detected template within
/// `max_rms` metres lateral RMS over the grid's forward span.
inline bool frame_failed(const GroundTruth& truth, std::span<const UncertainDeformationTemplate> lanes,
                         const BirdEyeGrid& grid, double max_rms = 0.3) {
  for (const auto& m : truth.markings) {
    if (!m.in_view) continue;
    bool matched = false;
    for (const auto& l : lanes) {
      const auto r = lateral_rms(l.curve, m.curve, grid.y_min, grid.y_max);
      if (r && *r <= max_rms) {
        matched = true;
        break;
      }
    }
    if (!matched) return true;
  }
  return false;
}

inline std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d", i);
  return buf;
}

// ---- render ----

inline RunReport cmd_render(const CliOptions& opt) {
  RunReport rep;
  rep.command = "render";
  try {
    PerceptionConfig pc = read_perception_config(detail::load_optional(opt.config), opt.config);
    if (opt.seed) pc.corpus.seed = *opt.seed;
    if (opt.frames) pc.corpus.frames = *opt.frames;
    if (pc.corpus.frames < 0) throw Error(ErrorCode::ValidationError, "frame count must be non-negative");
    rep.parameters = {{"calibration", to_json(pc.calib)}, {"corpus", to_json(pc.corpus)}, {"out", opt.out}};
    const std::filesystem::path dir(opt.out);
    detail::make_dir(dir);
    for (int i = 0; i < pc.corpus.frames; ++i) {
      const RenderedFrame fr = render_frame(corpus_scene(pc.corpus, i));
      const auto pgm = dir / (frame_name(i) + ".pgm");
      write_pgm(pgm.string(), fr.image);
      rep.files.push_back(pgm.string());
      auto csv = detail::open_out(dir / (frame_name(i) + ".truth.csv"), rep);
      write_truth_csv(csv, fr.truth);
    }
    rep.metrics = {{"frames", pc.corpus.frames}};
  } catch (const Error& e) {
    rep.fail(exit_code_for(e), e.what());
  }
  return rep;
}

// ---- detect ----

struct FrameOutcome {
  std::string id;
  enum class Status { Evaluated, Skipped, Error } status = Status::Evaluated;
  bool failed = false;
  double ms = 0.0;
  std::string message;
  std::vector<UncertainDeformationTemplate> lanes;
};

inline FrameOutcome process_frame(const std::filesystem::path& pgm, std::size_t index, const PerceptionConfig& pc) {
  FrameOutcome fo;
  fo.id = pgm.stem().string();
  const auto truth_path = pgm.parent_path() / (fo.id + ".truth.csv");
  if (!std::filesystem::exists(truth_path)) {
    fo.status = FrameOutcome::Status::Skipped;
    fo.message = "no truth sidecar for " + pgm.filename().string();
    return fo;
  }
  try {
    const GroundTruth truth = read_truth_csv(truth_path.string());
    const GrayImage img = read_pgm(pgm.string());
    DetectConfig cfg = pc.detect;
    cfg.ransac.seed = pc.detect.ransac.seed + index;
    const DetectionResult res = detect_lanes(img, pc.calib, cfg);
    fo.ms = res.elapsed_ms;
    fo.failed = frame_failed(truth, res.lanes, cfg.grid);
    fo.lanes = res.lanes;
  } catch (const Error& e) {
    fo.status = FrameOutcome::Status::Error;
    fo.message = pgm.filename().string() + ": " + e.what();
  }
  return fo;
}

inline RunReport cmd_detect(const CliOptions& opt) {
  RunReport rep;
  rep.command = "detect";
  try {
    PerceptionConfig pc = read_perception_config(detail::load_optional(opt.config), opt.config);
    if (opt.seed) pc.detect.ransac.seed = *opt.seed;
    const int jobs = opt.jobs > 0 ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
    rep.parameters = {{"corpus_dir", opt.input},
                      {"calibration", to_json(pc.calib)},
                      {"detect", to_json(pc.detect)},
                      {"failure_rms_m", 0.3},
                      {"jobs", jobs},
                      {"out", opt.out}};

    const std::filesystem::path dir(opt.input);
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "corpus directory not found: " + opt.input);
    std::vector<std::filesystem::path> frames;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") frames.push_back(e.path());
    }
    std::sort(frames.begin(), frames.end());

    std::vector<FrameOutcome> outcomes(frames.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      for (std::size_t i = next++; i < frames.size(); i = next++) outcomes[i] = process_frame(frames[i], i, pc);
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < std::min<int>(jobs, static_cast<int>(frames.size())); ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int evaluated = 0, failures = 0, skipped = 0, errored = 0;
    double ms = 0.0;
    for (const auto& fo : outcomes) {
      switch (fo.status) {
        case FrameOutcome::Status::Evaluated:
          ++evaluated;
          failures += fo.failed ? 1 : 0;
          ms += fo.ms;
          break;
        case FrameOutcome::Status::Skipped:
          ++skipped;
          rep.warnings.push_back(fo.message);
          break;
        case FrameOutcome::Status::Error:
          ++errored;
          rep.errors.push_back(fo.message);
          break;
      }
    }
    rep.metrics = {{"frames", frames.size()},
                   {"evaluated", evaluated},
                   {"failures", failures},
                   {"failure_rate", evaluated ? static_cast<double>(failures) / evaluated : 0.0},
                   {"mean_frame_ms", evaluated ? ms / evaluated : 0.0},
                   {"skipped_missing_truth", skipped},
                   {"file_errors", errored}};

    if (frames.empty()) {
      rep.fail(kExitValidation, "corpus is empty: " + opt.input);
      return rep;
    }
    detail::make_dir(opt.out);
    auto det = detail::open_out(std::filesystem::path(opt.out) / "detections.csv", rep);
    write_templates_header(det);
    for (const auto& fo : outcomes) write_templates_csv(det, fo.id, fo.lanes);
    auto per = detail::open_out(std::filesystem::path(opt.out) / "frames.csv", rep);
    per << "frame_id,status,failed,lanes,ms\n";
    for (const auto& fo : outcomes) {
      const char* st = fo.status == FrameOutcome::Status::Evaluated ? "ok"
                       : fo.status == FrameOutcome::Status::Skipped ? "skipped"
                                                                     : "error";
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%s,%d,%zu,%.3f\n", st, fo.failed ? 1 : 0, fo.lanes.size(), fo.ms);
      per << fo.id << buf;
    }
  } catch (const Error& e) {
    rep.fail(exit_code_for(e), e.what());
  }
  return rep;
}

// ---- risk ----

inline Json series_metrics(const SweepSeries& s) {
  Json j{{"label", s.label},
         {"area_length", s.area_length},
         {"area_width", s.area_width},
         {"peak", s.peak},
         {"peak_time", s.peak_time},
         {"crossing_time", optional_json(s.crossing_time)},
         {"contact_time", optional_json(s.contact_time)},
         {"mean_eval_ms", s.mean_eval_ms}};
  if (s.crossing_time && s.contact_time) j["lead_before_contact"] = *s.contact_time - *s.crossing_time;
  return j;
}

inline RunReport cmd_risk(const CliOptions& opt) {
  RunReport rep;
  rep.command = "risk";
  try {
    SweepConfig sc = read_sweep_config(detail::load_optional(opt.config), opt.config);
    if (opt.refine) {
      sc.risk.integration.max_refinements = *opt.refine;
      sc.risk.integration.validate();
    }
    rep.parameters = {{"risk", to_json(sc.risk)},
                      {"area_sweep", to_json(sc.area)},
                      {"mode_sweep", to_json(sc.modes)},
                      {"out", opt.out}};
    sc.area.validate();
    sc.modes.validate();
    const auto areas = run_area_sweep(sc.area, sc.risk);
    const auto modes = run_mode_sweep(sc.modes, sc.risk);

    Json area_j = Json::array(), mode_j = Json::array();
    for (const auto& s : areas) area_j.push_back(series_metrics(s));
    double lo = 1e300, hi = -1e300;
    for (const auto& s : modes) {
      mode_j.push_back(series_metrics(s));
      if (s.crossing_time) {
        lo = std::min(lo, *s.crossing_time);
        hi = std::max(hi, *s.crossing_time);
      }
    }
    rep.metrics = {{"area_sweep", {{"series", area_j}, {"relative_peak_spread", relative_peak_spread(areas)}}},
                   {"mode_sweep", {{"series", mode_j}, {"crossing_band", hi >= lo ? Json(hi - lo) : Json(nullptr)}}}};

    detail::make_dir(opt.out);
    auto a = detail::open_out(std::filesystem::path(opt.out) / "area_sweep.csv", rep);
    write_series_csv(a, areas);
    auto m = detail::open_out(std::filesystem::path(opt.out) / "mode_sweep.csv", rep);
    write_series_csv(m, modes);
  } catch (const Error& e) {
    rep.fail(exit_code_for(e), e.what());
  }
  return rep;
}

// ---- simulate ----

inline Json trace_metrics(const RunTrace& tr) {
  Json pairs = Json::array();
  for (const auto& p : tr.pairs) {
    pairs.push_back({{"ego", p.ego},
                     {"target", p.target},
                     {"peak", p.peak},
                     {"peak_time", p.peak_time},
                     {"first_reminding", optional_json(p.first_reminding)},
                     {"first_warning", optional_json(p.first_warning)}});
  }
  std::size_t dropped = 0;
  for (const auto& d : tr.deliveries) dropped += d.dropped ? 1 : 0;
  return {{"name", tr.name},
          {"peak", tr.peak},
          {"pairs", pairs},
          {"maneuver_start", optional_json(tr.maneuver_start)},
          {"return_start", optional_json(tr.return_start)},
          {"maneuver_end", optional_json(tr.maneuver_end)},
          {"messages", tr.deliveries.size()},
          {"dropped", dropped},
          {"perception_runs", tr.perception_runs},
          {"lane_offset_rms", tr.lane_offset_rms}};
}

inline void write_trace_files(const RunTrace& tr, const std::filesystem::path& dir, RunReport& rep) {
  auto v = detail::open_out(dir / (tr.name + ".vehicles.csv"), rep);
  write_vehicle_trace(v, tr);
  auto r = detail::open_out(dir / (tr.name + ".risk.csv"), rep);
  write_risk_trace(r, tr);
  auto d = detail::open_out(dir / (tr.name + ".deliveries.csv"), rep);
  write_delivery_log(d, tr.deliveries);
}

inline RunReport cmd_simulate(const CliOptions& opt) {
  RunReport rep;
  rep.command = "simulate";
  try {
    if (opt.input.empty()) throw Error(ErrorCode::ValidationError, "no scenario file given");
    auto scenarios = load_scenarios(opt.input);
    Json echo = Json::array();
    for (auto& sc : scenarios) {
      if (opt.seed) {
        sc.seed = *opt.seed;
        sc.channel.seed = *opt.seed;
      }
      if (opt.refine) sc.risk.integration.max_refinements = *opt.refine;
      sc.validate();
      echo.push_back(to_json(sc));
    }
    rep.parameters = {{"scenario_file", opt.input}, {"scenarios", echo}, {"out", opt.out}};
    detail::make_dir(opt.out);
    Json runs = Json::array();
    for (const auto& sc : scenarios) {
      const RunTrace tr = run_scenario(sc);
      runs.push_back(trace_metrics(tr));
      write_trace_files(tr, opt.out, rep);
    }
    rep.metrics = {{"runs", runs}};
  } catch (const Error& e) {
    rep.fail(exit_code_for(e), e.what());
  }
  return rep;
}

/// Writes report.json into the output directory when it exists.
inline void write_report(const RunReport& rep, const std::string& out_dir) {
  if (!std::filesystem::is_directory(out_dir)) return;
  std::ofstream f(std::filesystem::path(out_dir) / "report.json");
  if (f) f << rep.to_json().dump(2) << '\n';
}

}  // namespace coop
