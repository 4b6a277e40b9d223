#pragma once

// Fixed-step overtaking simulator. Vehicles move along lanes of a straight or
// constant-radius road; the ego runs a belief-desire-intention loop fed by simulated
// BSMs and (optionally) the camera lane detector.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coop/bezier.hpp"
#include "coop/camera_geometry.hpp"
#include "coop/error.hpp"
#include "coop/lane_udt.hpp"
#include "coop/risk_field.hpp"
#include "coop/synth_scene.hpp"
#include "coop/v2v_net.hpp"

namespace coop {

inline constexpr double kMaxAccel = 2.7;  // m/s^2

/// Lanes are numbered from the right, lane 0 centered on the reference line. Lateral
/// offset d is measured from the reference line, positive to the left.
struct Road {
  int lanes = 3;
  double lane_width = 3.5;
  double radius = 0.0;  // signed reference-line radius, positive turning left; 0 is straight

  void validate() const {
    if (lanes < 1) throw Error(ErrorCode::ValidationError, "road needs at least one lane");
    if (!(lane_width > 0)) throw Error(ErrorCode::ValidationError, "lane width must be positive");
    if (radius != 0.0 && std::abs(radius) <= lanes * lane_width) {
      throw Error(ErrorCode::ValidationError, "curve radius must exceed the road width");
    }
  }

  bool straight() const { return radius == 0.0; }
  double lane_center(int lane) const { return lane * lane_width; }
  int lane_of(double d) const {
    return std::clamp(static_cast<int>(std::lround(d / lane_width)), 0, lanes - 1);
  }
  double tangent(double s) const { return straight() ? 0.0 : s / radius; }

  /// Arc length advanced along the reference line per metre travelled at offset d.
  double progress_scale(double d) const { return straight() ? 1.0 : radius / (radius - d); }

  Eigen::Vector2d point(double s, double d) const {
    if (straight()) return {s, d};
    const double phi = s / radius;
    return Eigen::Vector2d(0.0, radius) + (radius - d) * Eigen::Vector2d(std::sin(phi), -std::cos(phi));
  }

  /// Inverse of point(): reference arc length and lateral offset of a world point. On
  /// curves the arc length is the one closest to `s_hint` (they repeat every lap).
  std::pair<double, double> project(const Eigen::Vector2d& p, double s_hint = 0.0) const {
    if (straight()) return {p.x(), p.y()};
    const Eigen::Vector2d r = p - Eigen::Vector2d(0.0, radius);
    const double raw = radius > 0 ? std::atan2(r.x(), -r.y()) : std::atan2(-r.x(), r.y());
    const double hint = s_hint / radius;
    const double phi = hint + normalize_angle(raw - hint);
    const double d = radius > 0 ? radius - r.norm() : radius + r.norm();
    return {radius * phi, d};
  }
};

enum class ManeuverPhase { Hold, LaneChangeOut, Pass, Return, Done };

inline const char* to_string(ManeuverPhase p) {
  switch (p) {
    case ManeuverPhase::Hold: return "hold";
    case ManeuverPhase::LaneChangeOut: return "lane_change_out";
    case ManeuverPhase::Pass: return "pass";
    case ManeuverPhase::Return: return "return";
    case ManeuverPhase::Done: return "done";
  }
  return "hold";
}

/// Lateral transition between two offsets over an arc-length span, shaped by the cubic
/// Bezier (0,0) (1/3,0) (2/3,1) (1,1): zero slope at both joins.
struct ManeuverProfile {
  ManeuverPhase phase = ManeuverPhase::LaneChangeOut;
  double s0 = 0.0, span = 1.0;  // m along the reference line
  double d_from = 0.0, d_to = 0.0;

  static const BezierCurve& shape() {
    static const BezierCurve c({Point2(0.0, 0.0), Point2(1.0 / 3.0, 0.0), Point2(2.0 / 3.0, 1.0), Point2(1.0, 1.0)});
    return c;
  }

  double progress(double s) const { return std::clamp((s - s0) / span, 0.0, 1.0); }
  double offset_at(double s) const { return d_from + (d_to - d_from) * bezier_eval(shape(), progress(s)).y(); }
  double slope_at(double s) const {
    const double u = (s - s0) / span;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const Point2 d = bezier_derivative(shape(), u);
    return (d_to - d_from) * d.y() / d.x() / span;
  }
};

/// Longitudinal and lateral state of a vehicle in road coordinates.
struct LaneState {
  double s = 0.0, d = 0.0;
  double speed = 0.0;  // m/s
  int direction = 1;   // -1 for oncoming traffic
};

/// Advances one step: speed moves toward the command within the acceleration limit,
/// the vehicle progresses along its lane and takes the profile's lateral offset.
inline LaneState step(const LaneState& st, double dt, double commanded_speed, const Road& road,
                      const ManeuverProfile* profile = nullptr) {
  if (!(dt > 0)) throw Error(ErrorCode::DomainError, "time step must be positive");
  LaneState out = st;
  const double dv = std::clamp(commanded_speed - st.speed, -kMaxAccel * dt, kMaxAccel * dt);
  out.speed = std::clamp(st.speed + dv, 0.0, VehicleState::kMaxSpeed);
  const double travelled = 0.5 * (st.speed + out.speed) * dt;
  out.s = st.s + st.direction * travelled * road.progress_scale(st.d);
  if (profile) out.d = profile->offset_at(out.s);
  return out;
}

/// World-frame state; heading follows the path tangent.
inline VehicleState to_vehicle_state(int id, const LaneState& st, double length, double width, const Road& road,
                                     const ManeuverProfile* profile = nullptr) {
  VehicleState v;
  v.id = id;
  v.speed = st.speed;
  v.length = length;
  v.width = width;
  const Eigen::Vector2d p = road.point(st.s, st.d);
  double theta = road.tangent(st.s);
  if (profile) theta += std::atan(profile->slope_at(st.s) / road.progress_scale(st.d));
  if (st.direction < 0) theta += std::numbers::pi;
  v.pose = Pose2D(p.x(), p.y(), theta);
  return v;
}

struct SpeedChange {
  double t = 0.0;      // s
  double speed = 0.0;  // m/s
};

struct VehicleSpec {
  int id = 0;
  int lane = 0;
  double s = 0.0;
  double speed = 0.0;
  double length = 4.2, width = 1.8;
  bool oncoming = false;
  std::vector<SpeedChange> speed_changes;
};

enum class ManeuverMode { Forced, Gated };

struct ManeuverSpec {
  double start_time = 0.0;  // s
  int target_lane = 1;
  double duration = 4.0;       // s per lateral transition
  ManeuverMode mode = ManeuverMode::Forced;
  double return_margin = 4.2;  // m the ego must lead beyond the overtaken vehicle's conflict area
  bool return_to_origin = true;
};

enum class PerceptionMode { Truth, Camera };

struct PerceptionSpec {
  PerceptionMode mode = PerceptionMode::Truth;
  int every_ticks = 10;
  double noise_sigma = 4.0;
  DetectConfig detect;
  CameraCalibration calib;
};

struct GateSpec {
  double behind = 10.0;  // m of target lane that must be clear behind the ego
  double ahead = 50.0;   // and ahead of it
};

struct Scenario {
  std::string name = "scenario";
  Road road;
  std::vector<VehicleSpec> vehicles;
  int ego_id = 0;
  std::optional<ManeuverSpec> maneuver;
  ChannelModel channel;
  RiskConfig risk;
  PerceptionSpec perception;
  GateSpec gate;
  std::int64_t dt_ms = 100;
  double duration = 20.0;  // s
  std::uint64_t seed = 1;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    const auto check = [&](bool ok, const std::string& what) {
      if (!ok) out.push_back(what);
    };
    try {
      road.validate();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
    try {
      channel.validate();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
    try {
      risk.validate();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
    check(dt_ms > 0, "dt_ms must be positive");
    check(dt_ms > 0 && channel.period_ms % std::max<std::int64_t>(dt_ms, 1) == 0, "dt_ms must divide the BSM period");
    check(duration > 0, "duration must be positive");
    check(perception.every_ticks > 0, "perception.every_ticks must be positive");
    std::map<int, int> ids;
    for (const auto& v : vehicles) {
      const std::string tag = "vehicle " + std::to_string(v.id) + ": ";
      check(++ids[v.id] == 1, tag + "duplicate id");
      check(v.lane >= 0 && v.lane < road.lanes, tag + "lane outside the road");
      check(v.speed >= 0 && v.speed <= VehicleState::kMaxSpeed, tag + "speed outside [0, 35] m/s");
      check(v.length > 0 && v.width > 0, tag + "dimensions must be positive");
      for (const auto& c : v.speed_changes) {
        check(c.speed >= 0 && c.speed <= VehicleState::kMaxSpeed, tag + "speed change outside [0, 35] m/s");
      }
    }
    check(vehicles.empty() || ids.count(ego_id) == 1, "ego_id does not name a vehicle");
    if (maneuver) {
      const auto* ego = find(ego_id);
      check(maneuver->target_lane >= 0 && maneuver->target_lane < road.lanes, "maneuver target lane outside the road");
      check(!ego || ego->lane != maneuver->target_lane, "maneuver target lane equals the ego lane");
      check(maneuver->duration > 0, "maneuver duration must be positive");
      check(maneuver->start_time >= 0, "maneuver start time must be non-negative");
      check(maneuver->return_margin >= 0, "maneuver return margin must be non-negative");
    }
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid scenario '" + name + "':";
    for (const auto& s : v) msg += "\n  - " + s;
    throw Error(ErrorCode::ValidationError, msg);
  }

  const VehicleSpec* find(int id) const {
    for (const auto& v : vehicles)
      if (v.id == id) return &v;
    return nullptr;
  }
};

struct BdiState {
  std::int64_t t_ms = 0;
  std::map<int, BsmMessage> neighbors;  // latest message per sender
  std::vector<UncertainDeformationTemplate> lanes;
  std::int64_t lanes_t_ms = -1;
  std::map<int, RiskEstimate> desires;
  ManeuverPhase intention = ManeuverPhase::Hold;
  bool gate_open = true;
};

struct VehicleRow {
  std::int64_t t_ms = 0;
  int id = 0;
  double x = 0, y = 0, theta = 0, speed = 0, s = 0, d = 0;
  ManeuverPhase phase = ManeuverPhase::Hold;
};

struct RiskRow {
  std::int64_t t_ms = 0;
  int ego = 0, target = 0;
  double ttc = kInfinity, probability = 0.0;
  RiskSignal signal = RiskSignal::None;
};

struct PairSummary {
  int ego = 0, target = 0;
  double peak = 0.0, peak_time = 0.0;
  std::optional<double> first_reminding, first_warning;
};

struct RunTrace {
  std::string name;
  std::vector<VehicleRow> vehicles;
  std::vector<RiskRow> risk;
  std::vector<DeliveryLogRow> deliveries;
  std::vector<PairSummary> pairs;
  double peak = 0.0;
  std::optional<double> maneuver_start, return_start, maneuver_end;
  int perception_runs = 0;
  double lane_offset_rms = 0.0;  // perceived vs true ego offset within its lane, m
};

/// Boundary markings of the road in a vehicle's frame (x right, y forward) over the
/// next `range` metres, as quadratic Bezier fits.
inline std::vector<MarkingSpec> road_markings_local(const Road& road, const VehicleState& v, double s, int direction,
                                                    double range = 60.0) {
  std::vector<MarkingSpec> out;
  const Pose2D pose = v.pose;
  for (int k = 0; k <= road.lanes; ++k) {
    const double d = (k - 0.5) * road.lane_width;
    std::vector<Point2> pts;
    for (int i = 0; i <= 24; ++i) {
      const double ds = direction * range * i / 24.0;
      const Eigen::Vector2d local = world_to_local(pose, road.point(s + ds, d));
      pts.emplace_back(-local.y(), local.x());
    }
    MarkingSpec m;
    m.curve = fit_control_points(pts, 2).curve;
    m.color = (k == road.lanes) ? MarkingColor::Yellow : MarkingColor::White;
    out.push_back(std::move(m));
  }
  return out;
}

class Simulation {
 public:
  explicit Simulation(Scenario sc) : sc_(std::move(sc)), channel_(sc_.channel) {
    sc_.validate();
    for (const auto& v : sc_.vehicles) {
      Actor a;
      a.spec = v;
      a.st.s = v.s;
      a.st.d = sc_.road.lane_center(v.lane);
      a.st.speed = v.speed;
      a.st.direction = v.oncoming ? -1 : 1;
      a.commanded = v.speed;
      actors_.push_back(a);
    }
    trace_.name = sc_.name;
  }

  RunTrace run() {
    const std::int64_t end_ms = static_cast<std::int64_t>(std::llround(sc_.duration * 1000.0));
    for (std::int64_t t = 0; t <= end_ms; t += sc_.dt_ms) tick(t);
    finish();
    return std::move(trace_);
  }

  const BdiState& bdi() const { return bdi_; }

 private:
  struct Actor {
    VehicleSpec spec;
    LaneState st;
    double commanded = 0.0;
    std::optional<ManeuverProfile> profile;
    std::size_t next_change = 0;
  };

  VehicleState state_of(const Actor& a) const {
    return to_vehicle_state(a.spec.id, a.st, a.spec.length, a.spec.width, sc_.road, a.profile ? &*a.profile : nullptr);
  }

  Actor* ego() {
    for (auto& a : actors_)
      if (a.spec.id == sc_.ego_id) return &a;
    return nullptr;
  }

  void tick(std::int64_t t) {
    const double dt = sc_.dt_ms / 1000.0;
    const double t_s = t / 1000.0;
    if (t > 0) {
      for (auto& a : actors_) {
        while (a.next_change < a.spec.speed_changes.size() && a.spec.speed_changes[a.next_change].t <= t_s) {
          a.commanded = a.spec.speed_changes[a.next_change++].speed;
        }
        a.st = step(a.st, dt, a.commanded, sc_.road, a.profile ? &*a.profile : nullptr);
      }
    }

    std::vector<VehicleState> states;
    for (const auto& a : actors_) states.push_back(state_of(a));

    if (t % sc_.channel.period_ms == 0) {
      for (const auto& a : actors_) {
        std::optional<bool> intent;
        if (a.spec.id == sc_.ego_id) intent = bdi_.intention == ManeuverPhase::LaneChangeOut;
        channel_.broadcast(state_of(a), states, t, intent);
      }
    }
    for (const auto& d : channel_.deliver(t)) {
      if (d.receiver == sc_.ego_id) bdi_.neighbors[static_cast<int>(d.msg.sender_id)] = d.msg;
    }

    if (Actor* e = ego()) bdi_tick(*e, t);

    for (const auto& a : actors_) {
      const VehicleState v = state_of(a);
      VehicleRow row{t, a.spec.id, v.pose.x, v.pose.y, v.pose.theta, v.speed, a.st.s, a.st.d, ManeuverPhase::Hold};
      if (a.spec.id == sc_.ego_id) row.phase = bdi_.intention;
      trace_.vehicles.push_back(row);
    }
  }

  // Lane-following constant-velocity prediction for neighbours.
  VehicleState predict_neighbor(const VehicleState& v, double tau, double s_hint) const {
    auto [s, d] = sc_.road.project(v.position(), s_hint);
    const double rel = normalize_angle(v.pose.theta - sc_.road.tangent(s));
    const int dir = std::cos(rel) >= 0 ? 1 : -1;
    LaneState st{s, d, v.speed, dir};
    LaneState next = st;
    next.s = s + dir * v.speed * tau * sc_.road.progress_scale(d);
    return to_vehicle_state(v.id, next, v.length, v.width, sc_.road);
  }

  // The ego knows its own plan and previews along it.
  VehicleState predict_ego(const Actor& e, double tau) const {
    LaneState next = e.st;
    next.s = e.st.s + e.st.direction * e.st.speed * tau * sc_.road.progress_scale(e.st.d);
    const ManeuverProfile* prof = e.profile ? &*e.profile : nullptr;
    if (prof) next.d = prof->offset_at(next.s);
    return to_vehicle_state(e.spec.id, next, e.spec.length, e.spec.width, sc_.road, prof);
  }

  void perceive(const Actor& e, const VehicleState& me, std::int64_t t) {
    const auto markings = road_markings_local(sc_.road, me, e.st.s, e.st.direction);
    std::vector<UncertainDeformationTemplate> lanes;
    if (sc_.perception.mode == PerceptionMode::Truth) {
      for (const auto& m : markings) {
        UncertainDeformationTemplate u;
        u.order = m.curve.degree() + 1;
        u.curve = m.curve;
        u.color = m.color;
        u.s = 1.0;
        lanes.push_back(std::move(u));
      }
    } else {
      SceneSpec spec;
      spec.calib = sc_.perception.calib;
      spec.markings = markings;
      spec.noise.gaussian_sigma = sc_.perception.noise_sigma;
      spec.seed = sc_.seed * 7919u + static_cast<std::uint64_t>(t);
      const RenderedFrame frame = render_frame(spec);
      lanes = detect_lanes(frame.image, spec.calib, sc_.perception.detect).lanes;
    }
    bdi_.lanes = std::move(lanes);
    bdi_.lanes_t_ms = t;
    ++trace_.perception_runs;

    // lateral offset of the ego inside its lane from the two nearest boundaries at 10 m
    std::optional<double> left, right;
    for (const auto& l : bdi_.lanes) {
      const auto x = lateral_at(l.curve, 10.0);
      if (!x) continue;
      if (*x < 0 && (!left || *x > *left)) left = *x;
      if (*x >= 0 && (!right || *x < *right)) right = *x;
    }
    if (left && right) {
      const double perceived = -(*left + *right) / 2.0;
      const double lane_d = sc_.road.lane_center(sc_.road.lane_of(e.st.d));
      const double truth = -(e.st.d - lane_d) * e.st.direction;
      offset_err2_ += (perceived - truth) * (perceived - truth);
      ++offset_n_;
    }
  }

  bool target_lane_clear(const Actor& e, int lane, std::int64_t t) const {
    for (const auto& [id, msg] : bdi_.neighbors) {
      const VehicleState v = msg.to_state(static_cast<std::uint64_t>(t));
      const auto [s, d] = sc_.road.project(v.position(), e.st.s);
      if (sc_.road.lane_of(d) != lane) continue;
      const double ahead = (s - e.st.s) * e.st.direction;
      if (ahead >= -sc_.gate.behind && ahead <= sc_.gate.ahead) return false;
    }
    return true;
  }

  void bdi_tick(Actor& e, std::int64_t t) {
    bdi_.t_ms = t;
    const VehicleState me = state_of(e);
    const std::int64_t tick_index = t / sc_.dt_ms;
    if (tick_index % sc_.perception.every_ticks == 0) perceive(e, me, t);

    // desires, from beliefs only
    bdi_.desires.clear();
    RiskSignal worst = RiskSignal::None;
    const StatePredictor pe = [&](const VehicleState&, double tau) { return predict_ego(e, tau); };
    const StatePredictor pn = [&](const VehicleState& v, double tau) { return predict_neighbor(v, tau, e.st.s); };
    for (const auto& [id, msg] : bdi_.neighbors) {
      const VehicleState other = msg.to_state(static_cast<std::uint64_t>(t));
      const RiskEstimate est = assess_pair(me, other, sc_.risk, pe, pn);
      bdi_.desires[id] = est;
      worst = std::max(worst, est.signal);
      trace_.risk.push_back({t, e.spec.id, id, est.ttc, est.probability, est.signal});
    }

    // intention
    if (!sc_.maneuver) return;
    const ManeuverSpec& m = *sc_.maneuver;
    const double t_s = t / 1000.0;
    const double span = std::max(e.st.speed, 1.0) * m.duration;
    switch (bdi_.intention) {
      case ManeuverPhase::Hold: {
        if (t_s + 1e-9 < m.start_time) break;
        bdi_.gate_open = worst < RiskSignal::Warning && target_lane_clear(e, m.target_lane, t);
        if (m.mode == ManeuverMode::Gated && !bdi_.gate_open) break;
        origin_d_ = e.st.d;
        overtaken_ = nearest_ahead(e, t);
        e.profile = ManeuverProfile{ManeuverPhase::LaneChangeOut, e.st.s, span * e.st.direction,
                                    e.st.d, sc_.road.lane_center(m.target_lane)};
        bdi_.intention = ManeuverPhase::LaneChangeOut;
        trace_.maneuver_start = t_s;
        break;
      }
      case ManeuverPhase::LaneChangeOut:
        if (done(e)) bdi_.intention = ManeuverPhase::Pass;
        break;
      case ManeuverPhase::Pass: {
        if (!m.return_to_origin) break;
        bool clear = true;
        if (overtaken_) {
          const auto it = bdi_.neighbors.find(*overtaken_);
          clear = false;
          if (it != bdi_.neighbors.end()) {
            const VehicleState b = it->second.to_state(static_cast<std::uint64_t>(t));
            const double sb = sc_.road.project(b.position(), e.st.s).first;
            const double lead = (e.st.s - sb) * e.st.direction;
            clear = lead >= sc_.risk.area.half_extent_x + m.return_margin;
          }
        }
        if (clear) {
          e.profile = ManeuverProfile{ManeuverPhase::Return, e.st.s, span * e.st.direction, e.st.d, origin_d_};
          bdi_.intention = ManeuverPhase::Return;
          trace_.return_start = t_s;
        }
        break;
      }
      case ManeuverPhase::Return:
        if (done(e)) {
          bdi_.intention = ManeuverPhase::Done;
          trace_.maneuver_end = t_s;
        }
        break;
      case ManeuverPhase::Done:
        break;
    }
  }

  bool done(const Actor& e) const {
    if (!e.profile) return true;
    return e.profile->span > 0 ? e.st.s >= e.profile->s0 + e.profile->span : e.st.s <= e.profile->s0;
  }

  std::optional<int> nearest_ahead(const Actor& e, std::int64_t t) const {
    std::optional<int> best;
    double best_gap = 1e300;
    const int lane = sc_.road.lane_of(e.st.d);
    for (const auto& [id, msg] : bdi_.neighbors) {
      const VehicleState v = msg.to_state(static_cast<std::uint64_t>(t));
      const auto [s, d] = sc_.road.project(v.position(), e.st.s);
      if (sc_.road.lane_of(d) != lane) continue;
      const double rel = normalize_angle(v.pose.theta - sc_.road.tangent(s));
      if ((std::cos(rel) >= 0 ? 1 : -1) != e.st.direction) continue;
      const double gap = (s - e.st.s) * e.st.direction;
      if (gap > 0 && gap < best_gap) {
        best_gap = gap;
        best = id;
      }
    }
    return best;
  }

  void finish() {
    trace_.deliveries = channel_.log();
    std::map<std::pair<int, int>, PairSummary> pairs;
    for (const auto& r : trace_.risk) {
      auto& p = pairs[{r.ego, r.target}];
      p.ego = r.ego;
      p.target = r.target;
      const double t = r.t_ms / 1000.0;
      if (r.probability > p.peak) {
        p.peak = r.probability;
        p.peak_time = t;
      }
      if (r.signal >= RiskSignal::Reminding && !p.first_reminding) p.first_reminding = t;
      if (r.signal >= RiskSignal::Warning && !p.first_warning) p.first_warning = t;
      trace_.peak = std::max(trace_.peak, r.probability);
    }
    for (auto& [k, p] : pairs) trace_.pairs.push_back(p);
    trace_.lane_offset_rms = offset_n_ ? std::sqrt(offset_err2_ / offset_n_) : 0.0;
  }

  Scenario sc_;
  Channel channel_;
  std::vector<Actor> actors_;
  BdiState bdi_;
  RunTrace trace_;
  double origin_d_ = 0.0;
  std::optional<int> overtaken_;
  double offset_err2_ = 0.0;
  int offset_n_ = 0;
};

inline RunTrace run_scenario(const Scenario& sc) { return Simulation(sc).run(); }

namespace detail {

inline void put_num(std::ostream& out, double v, const char* fmt = "%.6f") {
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
    return;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  out << buf;
}

}  // namespace detail

inline void write_vehicle_trace(std::ostream& out, const RunTrace& tr) {
  out << "t,id,x,y,theta,speed,s,d,phase\n";
  for (const auto& r : tr.vehicles) {
    detail::put_num(out, r.t_ms / 1000.0, "%.3f");
    out << ',' << r.id;
    for (double v : {r.x, r.y, r.theta, r.speed, r.s, r.d}) {
      out << ',';
      detail::put_num(out, v);
    }
    out << ',' << to_string(r.phase) << '\n';
  }
}

inline void write_risk_trace(std::ostream& out, const RunTrace& tr) {
  out << "t,ego_id,target_id,ttc,S_cp,signal\n";
  for (const auto& r : tr.risk) {
    detail::put_num(out, r.t_ms / 1000.0, "%.3f");
    out << ',' << r.ego << ',' << r.target << ',';
    detail::put_num(out, r.ttc, "%.4f");
    out << ',';
    detail::put_num(out, r.probability, "%.6f");
    out << ',' << to_string(r.signal) << '\n';
  }
}

}  // namespace coop
