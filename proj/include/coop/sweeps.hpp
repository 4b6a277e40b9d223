#pragma once

// Conflict-area and collision-mode sweeps over fixed approach trajectories.

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coop/error.hpp"
#include "coop/risk_field.hpp"
#include "coop/sim_engine.hpp"

namespace coop {

struct SweepSeries {
  std::string label;
  double area_length = 0.0, area_width = 0.0;
  std::vector<double> t, probability;
  double peak = 0.0, peak_time = 0.0;
  std::optional<double> contact_time;
  std::optional<double> crossing_time;
  double mean_eval_ms = 0.0;  // per risk evaluation
};

/// First time the series reaches `threshold`, interpolated between samples.
inline std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& p,
                                            double threshold) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < threshold) continue;
    if (i == 0) return t[0];
    const double f = (threshold - p[i - 1]) / (p[i] - p[i - 1]);
    return t[i - 1] + f * (t[i] - t[i - 1]);
  }
  return std::nullopt;
}

inline void summarize(SweepSeries& s, double threshold) {
  for (std::size_t i = 0; i < s.probability.size(); ++i) {
    if (s.probability[i] > s.peak) {
      s.peak = s.probability[i];
      s.peak_time = s.t[i];
    }
  }
  s.crossing_time = first_crossing(s.t, s.probability, threshold);
}

// ---- conflict-area sweep ----

struct AreaSweepConfig {
  std::vector<double> lengths{17.5, 18.0, 18.5, 19.0};
  double width = 4.2;
  double lead_speed = 55.0 / 3.6;
  double overtaker_speed = 80.0 / 3.6;
  double initial_gap = 40.0;
  double maneuver_start = 1.0;
  double duration = 15.0;

  void validate() const {
    if (lengths.empty()) throw Error(ErrorCode::ValidationError, "area sweep needs at least one length");
    for (double l : lengths) {
      if (!(l > 0)) throw Error(ErrorCode::ValidationError, "area lengths must be positive");
    }
    if (!(width > 0)) throw Error(ErrorCode::ValidationError, "area width must be positive");
  }
};

/// Two-lane straight road: the overtaker closes on the leader, changes lanes, passes
/// and returns, once per conflict-area size.
inline Scenario area_sweep_scenario(const AreaSweepConfig& cfg, const RiskConfig& risk) {
  Scenario sc;
  sc.name = "area_sweep";
  sc.road.lanes = 2;
  VehicleSpec a;
  a.id = 1;
  a.speed = cfg.overtaker_speed;
  VehicleSpec b;
  b.id = 2;
  b.s = cfg.initial_gap;
  b.speed = cfg.lead_speed;
  sc.vehicles = {a, b};
  sc.ego_id = 1;
  ManeuverSpec m;
  m.start_time = cfg.maneuver_start;
  m.target_lane = 1;
  sc.maneuver = m;
  sc.risk = risk;
  sc.duration = cfg.duration;
  return sc;
}

inline std::vector<SweepSeries> run_area_sweep(const AreaSweepConfig& cfg, const RiskConfig& risk) {
  cfg.validate();
  std::vector<SweepSeries> out;
  for (double len : cfg.lengths) {
    RiskConfig rc = risk;
    rc.area = ConflictArea::sized(len, cfg.width);
    const auto started = std::chrono::steady_clock::now();
    const RunTrace tr = run_scenario(area_sweep_scenario(cfg, rc));
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    SweepSeries s;
    char label[64];
    std::snprintf(label, sizeof label, "%.1fx%.1f", len, cfg.width);
    s.label = label;
    s.area_length = len;
    s.area_width = cfg.width;
    for (const auto& r : tr.risk) {
      s.t.push_back(r.t_ms / 1000.0);
      s.probability.push_back(r.probability);
    }
    s.mean_eval_ms = tr.risk.empty() ? 0.0 : ms / tr.risk.size();
    summarize(s, rc.thresholds.warning);
    out.push_back(std::move(s));
  }
  return out;
}

/// (max - min) / max of the series peaks.
inline double relative_peak_spread(const std::vector<SweepSeries>& series) {
  if (series.empty()) return 0.0;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : series) {
    lo = std::min(lo, s.peak);
    hi = std::max(hi, s.peak);
  }
  return hi > 0 ? (hi - lo) / hi : 0.0;
}

// ---- collision-mode sweep ----

struct CollisionMode {
  std::string label;
  double approach_deg = 0.0;  // direction of the relative velocity, clockwise from b's heading
};

struct ModeSweepConfig {
  std::vector<CollisionMode> modes{{"RRC", 0.0}, {"FRC", 30.0}, {"SRC", 90.0}};
  double closing_speed = 20.0 / 3.6;  // magnitude of the relative velocity
  double lead_speed = 40.0 / 3.6;
  double contact_time = 8.0;          // s after the start of the series
  double dt = 0.05;
  double tail = 0.5;                  // s sampled past contact
  double area_length = 17.0, area_width = 4.0;

  void validate() const {
    if (modes.empty()) throw Error(ErrorCode::ValidationError, "mode sweep needs at least one mode");
    if (!(closing_speed > 0) || !(contact_time > 0) || !(dt > 0)) {
      throw Error(ErrorCode::ValidationError, "mode sweep speeds and times must be positive");
    }
  }
};

struct ModeTrajectory {
  VehicleState a0, b0;  // states at t = 0, both at constant velocity afterwards
  VehicleState at_a(double t) const { return predict_straight(a0, t); }
  VehicleState at_b(double t) const { return predict_straight(b0, t); }
};

/// Places the overtaker on a straight approach line so its footprint first touches
/// b's at `contact_time`.
inline ModeTrajectory mode_trajectory(const CollisionMode& mode, const ModeSweepConfig& cfg) {
  const double ang = -mode.approach_deg * std::numbers::pi / 180.0;
  const Eigen::Vector2d rel_v = cfg.closing_speed * Eigen::Vector2d(std::cos(ang), std::sin(ang));
  const Eigen::Vector2d va = Eigen::Vector2d(cfg.lead_speed, 0.0) + rel_v;
  const Eigen::Vector2d dir = rel_v.normalized();

  VehicleState b;
  b.id = 2;
  b.speed = cfg.lead_speed;
  VehicleState a;
  a.id = 1;
  a.speed = va.norm();
  a.length = b.length;
  a.width = b.width;
  const double heading = std::atan2(va.y(), va.x());

  // touching offset along the approach line, by bisection
  const auto overlaps = [&](double lambda) {
    VehicleState probe = a;
    probe.pose = Pose2D(-lambda * dir.x(), -lambda * dir.y(), heading);
    return footprints_overlap(probe, b);
  };
  double lo = 0.0, hi = 50.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (overlaps(mid) ? lo : hi) = mid;
  }
  const double start = hi + cfg.closing_speed * cfg.contact_time;
  a.pose = Pose2D(-start * dir.x(), -start * dir.y(), heading);
  return {a, b};
}

inline std::vector<SweepSeries> run_mode_sweep(const ModeSweepConfig& cfg, const RiskConfig& risk) {
  cfg.validate();
  RiskConfig rc = risk;
  rc.area = ConflictArea::sized(cfg.area_length, cfg.area_width);
  std::vector<SweepSeries> out;
  for (const auto& mode : cfg.modes) {
    const ModeTrajectory traj = mode_trajectory(mode, cfg);
    SweepSeries s;
    s.label = mode.label;
    s.area_length = cfg.area_length;
    s.area_width = cfg.area_width;
    const auto started = std::chrono::steady_clock::now();
    const int n = static_cast<int>(std::floor((cfg.contact_time + cfg.tail) / cfg.dt + 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double t = i * cfg.dt;
      const VehicleState a = traj.at_a(t), b = traj.at_b(t);
      if (!s.contact_time && footprints_overlap(a, b)) s.contact_time = t;
      s.t.push_back(t);
      s.probability.push_back(assess_pair(a, b, rc).probability);
    }
    s.mean_eval_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count() / (n + 1);
    // contact refined on a fine grid
    for (double t = std::max(0.0, cfg.contact_time - 1.0); t <= cfg.contact_time + cfg.tail; t += 1e-3) {
      if (footprints_overlap(traj.at_a(t), traj.at_b(t))) {
        s.contact_time = t;
        break;
      }
    }
    summarize(s, rc.thresholds.warning);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_series_csv(std::ostream& out, const std::vector<SweepSeries>& series) {
  out << "series,area_length,area_width,t,S_cp\n";
  char buf[128];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.3f,%.6f\n", s.label.c_str(), s.area_length, s.area_width,
                    s.t[i], s.probability[i]);
      out << buf;
    }
  }
}

}  // namespace coop
