#pragma once

// Time to collision, Gaussian conflict potential fields and the collision probability
// obtained by integrating their joint density over a conflict area.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "coop/camera_geometry.hpp"
#include "coop/error.hpp"

namespace coop {

struct VehicleState {
  int id = 0;
  Pose2D pose;
  double speed = 0.0;   // m/s along heading
  double length = 4.2;  // m
  double width = 1.8;

  static constexpr double kMaxSpeed = 35.0;

  void validate() const {
    if (!(length > 0) || !(width > 0)) throw Error(ErrorCode::ValidationError, "vehicle dimensions must be positive");
    if (!(speed >= 0 && speed <= kMaxSpeed)) throw Error(ErrorCode::ValidationError, "vehicle speed outside [0, 35] m/s");
  }

  Eigen::Vector2d position() const { return {pose.x, pose.y}; }
  Eigen::Vector2d heading() const { return {std::cos(pose.theta), std::sin(pose.theta)}; }
};

struct FieldParams {
  double sigma_x = 2.1;      // m
  double r_a = 0.4;          // s
  double r_c = 0.3;
  double sigma_y_max = 1.75; // m

  void validate() const {
    if (!(sigma_x > 0) || !(r_a > 0) || !(r_c > 0) || !(sigma_y_max > 0)) {
      throw Error(ErrorCode::ValidationError, "field parameters must be positive");
    }
  }
};

struct PotentialField {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  FrameTag frame = FrameTag::VehicleLocal;
};

/// Axis-aligned rectangle in conflict coordinates.
struct ConflictArea {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent_x = 8.75;
  double half_extent_y = 2.1;

  static ConflictArea sized(double length, double width) {
    ConflictArea a;
    a.half_extent_x = length / 2.0;
    a.half_extent_y = width / 2.0;
    return a;
  }

  void validate() const {
    if (!(half_extent_x > 0) || !(half_extent_y > 0)) {
      throw Error(ErrorCode::ValidationError, "conflict area extents must be positive");
    }
  }
};

enum class RiskSignal { None, Reminding, Warning };

inline const char* to_string(RiskSignal s) {
  switch (s) {
    case RiskSignal::None: return "none";
    case RiskSignal::Reminding: return "reminding";
    case RiskSignal::Warning: return "warning";
  }
  return "none";
}

struct RiskThresholds {
  double reminding = 0.15;
  double warning = 0.3;

  void validate() const {
    if (!(reminding > 0 && reminding < warning && warning <= 1.0)) {
      throw Error(ErrorCode::ValidationError, "thresholds must satisfy 0 < reminding < warning <= 1");
    }
  }
};

struct RiskEstimate {
  double probability = 0.0;
  double ttc = std::numeric_limits<double>::infinity();
  RiskSignal signal = RiskSignal::None;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Constant-speed time to collision for a follower `a` closing on `b` over center gap
/// `gap`. Infinite unless a is faster.
inline double ttc(const VehicleState& a, const VehicleState& b, double gap) {
  if (!(a.speed > b.speed)) return kInfinity;
  const double clearance = std::max(0.0, gap - a.length / 2.0 - b.length / 2.0);
  return clearance / (a.speed - b.speed);
}

/// Longitudinal closing speed of a onto b, measured along a's heading.
inline double relative_long_velocity(const VehicleState& a, const VehicleState& b) {
  return a.speed - b.speed * std::cos(b.pose.theta - a.pose.theta);
}

/// True once a's rear has cleared b's front along a's heading.
inline bool has_passed(const VehicleState& a, const VehicleState& b) {
  const double ahead = (a.position() - b.position()).dot(a.heading());
  return ahead > (a.length + b.length) / 2.0;
}

inline PotentialField build_field(const VehicleState& v, double delta_v, bool passed,
                                  const FieldParams& p) {
  p.validate();
  v.validate();
  double sx = passed ? p.sigma_x - p.r_a * delta_v : p.sigma_x + p.r_a * delta_v;
  sx = std::max(sx, 0.1 * p.sigma_x);
  const double sy = std::min(p.r_c * sx, p.sigma_y_max);
  PotentialField f;
  f.cov = Eigen::Vector2d(sx * sx, sy * sy).asDiagonal();
  f.frame = FrameTag::VehicleLocal;
  return f;
}

/// Rotation of a vehicle-frame field by heading theta.
inline PotentialField field_to_world(const PotentialField& f, double theta) {
  const Eigen::Matrix2d r = rotation_matrix(theta);
  PotentialField w;
  w.mean = r * f.mean;
  w.cov = r * f.cov * r.transpose();
  w.cov = 0.5 * (w.cov + w.cov.transpose()).eval();
  w.frame = FrameTag::World;
  return w;
}

/// Rotation plus translation to the vehicle's world position.
inline PotentialField field_to_world(const PotentialField& f, const Pose2D& pose) {
  PotentialField w = field_to_world(f, pose.theta);
  w.mean += Eigen::Vector2d(pose.x, pose.y);
  return w;
}

struct JointField {
  Eigen::Matrix2d cov;        // world frame
  Eigen::Matrix2d axes;       // columns: major and minor principal directions (world)
  Eigen::Vector2d eigen;      // variances along the axes
  Eigen::Vector2d mu;         // a's center in conflict coordinates
  Eigen::Matrix2d conflict_cov() const { return eigen.asDiagonal(); }
};

/// Joint covariance and conflict-coordinate offset of a relative to b. The major axis
/// is oriented along `reference` (normally b's heading); isotropic joints take the
/// reference as the major axis.
inline JointField joint_field(const PotentialField& a_world, const PotentialField& b_world,
                              const Eigen::Vector2d& reference = Eigen::Vector2d::UnitX()) {
  JointField j;
  j.cov = a_world.cov + b_world.cov;
  j.cov = 0.5 * (j.cov + j.cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j.cov);
  const Eigen::Vector2d ev = es.eigenvalues();  // ascending
  Eigen::Vector2d major = es.eigenvectors().col(1);
  const double ref_norm = reference.norm();
  const Eigen::Vector2d ref = ref_norm > 0 ? Eigen::Vector2d(reference / ref_norm) : Eigen::Vector2d::UnitX();
  if (ev(1) - ev(0) <= 1e-12 * std::max(1.0, ev(1))) major = ref;
  if (major.dot(ref) < 0) major = -major;
  const Eigen::Vector2d minor(-major.y(), major.x());
  j.axes.col(0) = major;
  j.axes.col(1) = minor;
  j.eigen = Eigen::Vector2d(major.dot(j.cov * major), minor.dot(j.cov * minor));
  j.mu = j.axes.transpose() * (a_world.mean - b_world.mean);
  return j;
}

inline double joint_pdf(const Eigen::Matrix2d& cov, const Eigen::Vector2d& mu, const Eigen::Vector2d& x) {
  const double det = cov.determinant();
  if (!(det > 0) || !(cov(0, 0) > 0)) throw Error(ErrorCode::SingularCovariance, "covariance not positive definite");
  const Eigen::Vector2d d = x - mu;
  const double m2 = d.dot(cov.inverse() * d);
  return std::exp(-0.5 * m2) / (2.0 * std::numbers::pi * std::sqrt(det));
}

struct IntegrationConfig {
  int nodes = 129;            // per axis, odd
  double tolerance = 1e-4;
  int max_refinements = 4;
  double clip_sigmas = 10.0;  // integration box truncated to mu +- clip * marginal sd

  void validate() const {
    if (nodes < 3 || nodes % 2 == 0) throw Error(ErrorCode::ValidationError, "Simpson node count must be odd and >= 3");
    if (max_refinements < 0 || !(tolerance > 0) || !(clip_sigmas > 0)) {
      throw Error(ErrorCode::ValidationError, "invalid integration settings");
    }
  }
};

namespace detail {

inline std::vector<double> simpson_weights(int nodes, double h) {
  std::vector<double> w(nodes);
  for (int i = 0; i < nodes; ++i) w[i] = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (double& v : w) v *= h / 3.0;
  return w;
}

struct Box {
  double x0, x1, y0, y1;
};

inline double simpson_once(const Eigen::Matrix2d& cov, const Eigen::Vector2d& mu, const Box& b, int nodes,
                           bool diagonal) {
  const double hx = (b.x1 - b.x0) / (nodes - 1), hy = (b.y1 - b.y0) / (nodes - 1);
  const auto wx = simpson_weights(nodes, hx), wy = simpson_weights(nodes, hy);
  if (diagonal) {
    // separable integrand: the 2-D rule factors into two 1-D sums
    const double sx = std::sqrt(cov(0, 0)), sy = std::sqrt(cov(1, 1));
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    double ix = 0.0, iy = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double zx = (b.x0 + i * hx - mu.x()) / sx;
      ix += wx[i] * norm / sx * std::exp(-0.5 * zx * zx);
      const double zy = (b.y0 + i * hy - mu.y()) / sy;
      iy += wy[i] * norm / sy * std::exp(-0.5 * zy * zy);
    }
    return ix * iy;
  }
  const Eigen::Matrix2d inv = cov.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
  double acc = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double dy = b.y0 + j * hy - mu.y();
    double row = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double dx = b.x0 + i * hx - mu.x();
      const double m2 = inv(0, 0) * dx * dx + 2.0 * inv(0, 1) * dx * dy + inv(1, 1) * dy * dy;
      row += wx[i] * std::exp(-0.5 * m2);
    }
    acc += wy[j] * row;
  }
  return acc * norm;
}

}  // namespace detail

/// Integral of the joint density over the conflict area by composite Simpson, refined
/// by doubling the node spacing until successive estimates agree within tolerance.
inline double collision_probability(const Eigen::Matrix2d& cov, const Eigen::Vector2d& mu,
                                    const ConflictArea& area, const IntegrationConfig& cfg = {}) {
  area.validate();
  cfg.validate();
  if (!(cov.determinant() > 0) || !(cov(0, 0) > 0)) {
    throw Error(ErrorCode::SingularCovariance, "covariance not positive definite");
  }
  const double sx = std::sqrt(cov(0, 0)), sy = std::sqrt(cov(1, 1));
  detail::Box b{std::max(area.center.x() - area.half_extent_x, mu.x() - cfg.clip_sigmas * sx),
                std::min(area.center.x() + area.half_extent_x, mu.x() + cfg.clip_sigmas * sx),
                std::max(area.center.y() - area.half_extent_y, mu.y() - cfg.clip_sigmas * sy),
                std::min(area.center.y() + area.half_extent_y, mu.y() + cfg.clip_sigmas * sy)};
  if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) return 0.0;
  const bool diagonal = std::abs(cov(0, 1)) <= 1e-12 * std::sqrt(cov(0, 0) * cov(1, 1));

  int nodes = cfg.nodes;
  double prev = detail::simpson_once(cov, mu, b, nodes, diagonal);
  for (int r = 0; r < cfg.max_refinements; ++r) {
    nodes = 2 * (nodes - 1) + 1;
    const double next = detail::simpson_once(cov, mu, b, nodes, diagonal);
    const bool done = std::abs(next - prev) < cfg.tolerance;
    prev = next;
    if (done) break;
  }
  return std::clamp(prev, 0.0, 1.0);
}

inline RiskSignal risk_signal(double prob, const RiskThresholds& th) {
  if (prob >= th.warning) return RiskSignal::Warning;
  if (prob >= th.reminding) return RiskSignal::Reminding;
  return RiskSignal::None;
}

/// Advances a state by tau seconds.
using StatePredictor = std::function<VehicleState(const VehicleState&, double)>;

inline VehicleState predict_straight(const VehicleState& v, double tau) {
  VehicleState out = v;
  out.pose = Pose2D(v.pose.x + v.speed * tau * std::cos(v.pose.theta),
                    v.pose.y + v.speed * tau * std::sin(v.pose.theta), v.pose.theta);
  return out;
}

struct RiskConfig {
  FieldParams field;
  ConflictArea area;
  RiskThresholds thresholds;
  IntegrationConfig integration;
  double preview_horizon = 3.0;  // s
  double preview_step = 0.25;    // s

  void validate() const {
    field.validate();
    area.validate();
    thresholds.validate();
    integration.validate();
    if (!(preview_horizon >= 0) || !(preview_step > 0)) {
      throw Error(ErrorCode::ValidationError, "preview horizon must be >= 0 and step > 0");
    }
  }
};

/// Collision probability of a against b for the current states.
inline double instantaneous_probability(const VehicleState& a, const VehicleState& b, const RiskConfig& cfg) {
  const double dv = relative_long_velocity(a, b);
  const bool passed = has_passed(a, b);
  const PotentialField fa = field_to_world(build_field(a, dv, passed, cfg.field), a.pose);
  const PotentialField fb = field_to_world(build_field(b, dv, passed, cfg.field), b.pose);
  const JointField j = joint_field(fa, fb, b.heading());
  return collision_probability(j.conflict_cov(), j.mu, cfg.area, cfg.integration);
}

/// Follower TTC along a's heading; infinite without lateral overlap or when b is behind.
inline double pair_ttc(const VehicleState& a, const VehicleState& b) {
  const Eigen::Vector2d d = b.position() - a.position();
  const double gap = d.dot(a.heading());
  const double lateral = std::abs(d.dot(Eigen::Vector2d(-a.heading().y(), a.heading().x())));
  if (gap <= 0 || lateral >= (a.width + b.width) / 2.0) return kInfinity;
  VehicleState bb = b;
  bb.speed = std::max(0.0, b.speed * std::cos(b.pose.theta - a.pose.theta));
  return ttc(a, bb, gap);
}

/// Risk of a against b: the largest collision probability over a constant-velocity
/// preview of both vehicles, with the signal derived from it.
inline RiskEstimate assess_pair(const VehicleState& a, const VehicleState& b, const RiskConfig& cfg,
                                const StatePredictor& predict_a, const StatePredictor& predict_b) {
  RiskEstimate est;
  est.ttc = pair_ttc(a, b);
  double peak = instantaneous_probability(a, b, cfg);
  const int steps = static_cast<int>(std::floor(cfg.preview_horizon / cfg.preview_step + 1e-9));
  for (int k = 1; k <= steps; ++k) {
    const double tau = k * cfg.preview_step;
    peak = std::max(peak, instantaneous_probability(predict_a(a, tau), predict_b(b, tau), cfg));
  }
  est.probability = std::clamp(peak, 0.0, 1.0);
  est.signal = risk_signal(est.probability, cfg.thresholds);
  return est;
}

inline RiskEstimate assess_pair(const VehicleState& a, const VehicleState& b, const RiskConfig& cfg,
                                const StatePredictor& predict = predict_straight) {
  return assess_pair(a, b, cfg, predict, predict);
}

/// Separating-axis overlap test of the two vehicle footprints.
inline bool footprints_overlap(const VehicleState& a, const VehicleState& b) {
  const Eigen::Vector2d d = b.position() - a.position();
  const Eigen::Vector2d axes[4] = {a.heading(), {-a.heading().y(), a.heading().x()}, b.heading(),
                                   {-b.heading().y(), b.heading().x()}};
  const auto radius = [](const VehicleState& v, const Eigen::Vector2d& axis) {
    const Eigen::Vector2d h = v.heading(), n(-h.y(), h.x());
    return v.length / 2.0 * std::abs(h.dot(axis)) + v.width / 2.0 * std::abs(n.dot(axis));
  };
  for (const auto& ax : axes) {
    if (std::abs(d.dot(ax)) > radius(a, ax) + radius(b, ax)) return false;
  }
  return true;
}

}  // namespace coop
