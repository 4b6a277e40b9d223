// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "coop/config_io.hpp"
#include "coop/lane_udt.hpp"
#include "coop/sim_engine.hpp"
#include "coop/sweeps.hpp"
#include "coop/synth_scene.hpp"
#include "coop/v2v_net.hpp"

using namespace coop;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d  %-28s %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string source(const std::string& rel) { return std::string(COOP_SOURCE_DIR) + "/" + rel; }

double monte_carlo(const Eigen::Matrix2d& cov, const Eigen::Vector2d& mu, const ConflictArea& area, int n,
                   std::mt19937_64& rng) {
  const Eigen::Matrix2d l = cov.llt().matrixL();
  std::normal_distribution<double> z(0, 1);
  int hit = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d p = mu + l * Eigen::Vector2d(z(rng), z(rng)) - area.center;
    hit += std::abs(p.x()) <= area.half_extent_x && std::abs(p.y()) <= area.half_extent_y ? 1 : 0;
  }
  return static_cast<double>(hit) / n;
}

void gaussian_machinery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> sd(0.3, 6.0), ang(-3.1, 3.1), off(-15, 15), len(1, 25);

  double norm_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Eigen::Matrix2d r = rotation_matrix(ang(rng));
    const Eigen::Vector2d s(sd(rng), sd(rng));
    const Eigen::Matrix2d cov = r * s.cwiseAbs2().asDiagonal() * r.transpose();
    const double big = 8.0 * s.maxCoeff();
    norm_err = std::max(norm_err, std::abs(collision_probability(cov, Eigen::Vector2d::Zero(),
                                                                 ConflictArea::sized(2 * big, 2 * big)) - 1.0));
  }

  double mc_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix2d r = rotation_matrix(ang(rng));
    const Eigen::Matrix2d cov = r * Eigen::Vector2d(sd(rng), sd(rng)).cwiseAbs2().asDiagonal() * r.transpose();
    const Eigen::Vector2d mu(off(rng), off(rng) / 3.0);
    const auto area = ConflictArea::sized(len(rng), len(rng) / 4.0);
    mc_err = std::max(mc_err, std::abs(collision_probability(cov, mu, area) - monte_carlo(cov, mu, area, 1000000, rng)));
  }

  double rot_err = 0.0;
  const RiskConfig cfg;
  std::uniform_real_distribution<double> pos(-20, 20), head(-0.2, 0.2), speed(5, 30);
  for (int i = 0; i < 20; ++i) {
    VehicleState a, b;
    a.pose = Pose2D(pos(rng), pos(rng) / 5, head(rng));
    b.pose = Pose2D(pos(rng), pos(rng) / 5, head(rng));
    a.speed = speed(rng);
    b.speed = speed(rng);
    const double base = instantaneous_probability(a, b, cfg);
    const double th = ang(rng);
    const Eigen::Matrix2d r = rotation_matrix(th);
    auto ra = a, rb = b;
    const Eigen::Vector2d pa = r * a.position(), pb = r * b.position();
    ra.pose = Pose2D(pa.x(), pa.y(), a.pose.theta + th);
    rb.pose = Pose2D(pb.x(), pb.y(), b.pose.theta + th);
    rot_err = std::max(rot_err, std::abs(instantaneous_probability(ra, rb, cfg) - base));
  }

  const double secs = seconds_since(t0);
  report(1, "Gaussian machinery", norm_err <= 1e-3 && mc_err <= 0.01 && rot_err <= 1e-6 && secs < 30.0,
         fmt("norm err %.2e (<=1e-3), MC err %.4f over 50 cases (<=0.01), rotation err %.2e (<=1e-6), %.1f s (<30)",
             norm_err, mc_err, rot_err, secs));
}

void area_and_mode_sweeps(const SweepConfig& sc) {
  const auto areas = run_area_sweep(sc.area, sc.risk);
  std::string peaks;
  for (const auto& s : areas) peaks += fmt("%.1fm:%.3f ", s.area_length, s.peak);
  const double spread = relative_peak_spread(areas);
  report(2, "conflict-area sweep", spread <= 0.15, fmt("peaks %sspread %.3f (<=0.15)", peaks.c_str(), spread));

  const auto modes = run_mode_sweep(sc.modes, sc.risk);
  bool ok = !modes.empty();
  double lo = 1e300, hi = -1e300, min_lead = 1e300;
  std::string detail;
  for (const auto& s : modes) {
    if (!s.crossing_time || !s.contact_time) {
      ok = false;
      detail += s.label + ":no-crossing ";
      continue;
    }
    const double lead = *s.contact_time - *s.crossing_time;
    min_lead = std::min(min_lead, lead);
    lo = std::min(lo, *s.crossing_time);
    hi = std::max(hi, *s.crossing_time);
    detail += fmt("%s lead %.2fs ", s.label.c_str(), lead);
  }
  ok = ok && min_lead >= 3.0 && hi - lo <= 1.0;
  report(3, "collision-mode sweep", ok, fmt("%sband %.3fs (leads>=3, band<=1)", detail.c_str(), hi - lo));
}

void case_patterns() {
  std::vector<double> c1, c2;
  for (const auto& sc : load_scenarios(source("scenarios/case1.yaml"))) c1.push_back(run_scenario(sc).peak);
  const auto case2 = load_scenarios(source("scenarios/case2.yaml"));
  for (const auto& sc : case2) c2.push_back(run_scenario(sc).peak);
  const double warn = case2.empty() ? 0.3 : case2.front().risk.thresholds.warning;
  const bool ok1 = c1.size() == 3 && c1[0] < c1[1] && c1[1] < c1[2];
  const bool ok2 = c2.size() == 3 && c2[0] < warn && c2[1] < warn && c2[2] > warn;
  report(4, "case patterns", ok1 && ok2,
         fmt("case1 peaks %.3f < %.3f < %.3f; case2 peaks %.3f, %.3f below and %.3f above %.2f",
             c1.size() > 0 ? c1[0] : -1.0, c1.size() > 1 ? c1[1] : -1.0, c1.size() > 2 ? c1[2] : -1.0,
             c2.size() > 0 ? c2[0] : -1.0, c2.size() > 1 ? c2[1] : -1.0, c2.size() > 2 ? c2[2] : -1.0, warn));
}

bool frame_ok(const GroundTruth& truth, const std::vector<UncertainDeformationTemplate>& lanes,
              const BirdEyeGrid& grid) {
  for (const auto& m : truth.markings) {
    if (!m.in_view) continue;
    bool hit = false;
    for (const auto& l : lanes) {
      const auto rms = lateral_rms(l.curve, m.curve, grid.y_min, grid.y_max);
      if (rms && *rms <= 0.3) hit = true;
    }
    if (!hit) return false;
  }
  return true;
}

void lane_detection(const PerceptionConfig& pc) {
  int failed = 0;
  double ms = 0.0;
  const int n = pc.corpus.frames;
  for (int i = 0; i < n; ++i) {
    const auto fr = render_frame(corpus_scene(pc.corpus, i));
    DetectConfig cfg = pc.detect;
    cfg.ransac.seed = pc.detect.ransac.seed + static_cast<std::uint64_t>(i);
    const auto res = detect_lanes(fr.image, pc.calib, cfg);
    ms += res.elapsed_ms;
    failed += frame_ok(fr.truth, res.lanes, cfg.grid) ? 0 : 1;
  }
  const double rate = n ? static_cast<double>(failed) / n : 1.0;
  const double mean_ms = n ? ms / n : 0.0;

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-10, 10), tu(0, 1);
  double fit_err = 0.0;
  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k < 20; ++k) {
      std::vector<Point2> ctrl;
      for (int i = 0; i <= d; ++i) ctrl.emplace_back(u(rng), u(rng));
      const BezierCurve c(ctrl);
      std::vector<double> t{0.0, 1.0};
      for (int i = 0; i < 40; ++i) t.push_back(tu(rng));
      std::vector<Point2> pts;
      for (double ti : t) pts.push_back(bezier_eval(c, ti));
      const auto fit = fit_control_points(pts, t, d);
      for (int i = 0; i <= d; ++i) fit_err = std::max(fit_err, (fit.curve.control[i] - c.control[i]).norm());
    }
  }

  // straight road, both markings, 100 RANSAC seeds
  SceneSpec spec;
  spec.calib = pc.calib;
  spec.markings = lane_markings(1, 1, 3.5, 0.15, 0.004, 0.0);
  spec.noise.gaussian_sigma = 6.0;
  spec.seed = 5;
  const auto img = render_frame(spec).image;
  int order2 = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    DetectConfig cfg = pc.detect;
    cfg.ransac.seed = seed;
    const auto res = detect_lanes(img, pc.calib, cfg);
    bool all2 = res.lanes.size() == 2;
    for (const auto& l : res.lanes) all2 = all2 && l.order == 2;
    order2 += all2 ? 1 : 0;
  }

  report(5, "lane detection", rate < 0.06 && mean_ms <= 50.0 && fit_err < 1e-6 && order2 >= 95,
         fmt("%d/%d frames failed (%.1f%%, <6%%), %.1f ms/frame (<=50), fit err %.1e m (<1e-6), "
             "order 2 in %d/100 runs (>=95)",
             failed, n, 100.0 * rate, mean_ms, fit_err, order2));
}

void ttc_closed_form() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> gap(0, 120), va(0.5, 35), frac(0, 1), len(3, 6);
  double err = 0.0;
  for (int i = 0; i < 100; ++i) {
    VehicleState a, b;
    a.length = len(rng);
    b.length = len(rng);
    a.speed = va(rng);
    b.speed = a.speed * frac(rng) * 0.999;
    const double s = gap(rng);
    const double expect = std::max(0.0, s - a.length / 2 - b.length / 2) / (a.speed - b.speed);
    err = std::max(err, std::abs(ttc(a, b, s) - expect));
  }
  VehicleState a, b;
  a.speed = 20;
  b.speed = 10;
  const bool contact = ttc(a, b, (a.length + b.length) / 2) == 0.0 && ttc(a, b, 0.5) == 0.0;
  b.speed = 20;
  bool open = std::isinf(ttc(a, b, 30));
  b.speed = 25;
  open = open && std::isinf(ttc(a, b, 30));
  report(6, "TTC closed form", err <= 1e-9 && contact && open,
         fmt("max err %.1e over 100 cases (<=1e-9), contact->0 %s, non-closing->inf %s", err, contact ? "yes" : "no",
             open ? "yes" : "no"));
}

std::string trace_csv(const RunTrace& tr) {
  std::ostringstream os;
  write_vehicle_trace(os, tr);
  write_risk_trace(os, tr);
  write_delivery_log(os, tr.deliveries);
  return os.str();
}

void determinism() {
  int identical = 0, total = 0;
  for (const char* f : {"scenarios/case1.yaml", "scenarios/case2.yaml"}) {
    for (const auto& sc : load_scenarios(source(f))) {
      ++total;
      identical += trace_csv(run_scenario(sc)) == trace_csv(run_scenario(sc)) ? 1 : 0;
    }
  }
  ChannelModel m;
  m.loss_prob = 0.2;
  m.seed = 99;
  Channel ch(m);
  VehicleState tx, rx;
  tx.id = 1;
  rx.id = 2;
  rx.pose = Pose2D(50, 0, 0);
  const std::vector<VehicleState> v{tx, rx};
  const int n = 10000;
  std::size_t delivered = 0;
  for (int i = 0; i < n; ++i) delivered += ch.broadcast(tx, v, i * m.period_ms).size();
  const double frac = static_cast<double>(delivered) / n;
  report(7, "determinism and channel", identical == total && total > 0 && std::abs(frac - 0.8) <= 0.02,
         fmt("%d/%d scenario runs byte-identical, delivered fraction %.4f (0.8 +- 0.02)", identical, total, frac));
}

}  // namespace

int main() {
  try {
    const auto sweeps = read_sweep_config(load_yaml_file(source("config/sweeps.yaml")), "config/sweeps.yaml");
    const auto perception =
        read_perception_config(load_yaml_file(source("config/perception.yaml")), "config/perception.yaml");
    gaussian_machinery();
    area_and_mode_sweeps(sweeps);
    case_patterns();
    lane_detection(perception);
    ttc_closed_form();
    determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
