#pragma once

// Coordinate frames, the pinhole inverse-perspective transform and planar rotations.
//
// Vehicle frame: origin on the ground below the camera, x to the right, y forward,
// z up. Image frame: u to the right, v downward, origin at the top-left pixel.
// Positive pitch tilts the optical axis toward the ground, positive yaw turns it
// toward +x.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "coop/error.hpp"

namespace coop {

enum class FrameTag { World, VehicleLocal, Camera, ImagePixel, BirdEye };

/// Conversions exist only along declared edges.
constexpr bool can_convert(FrameTag from, FrameTag to) {
  if (from == to) return true;
  auto edge = [&](FrameTag a, FrameTag b) {
    return (from == a && to == b) || (from == b && to == a);
  };
  return edge(FrameTag::ImagePixel, FrameTag::BirdEye) ||
         edge(FrameTag::VehicleLocal, FrameTag::World) ||
         edge(FrameTag::Camera, FrameTag::ImagePixel) ||
         edge(FrameTag::Camera, FrameTag::VehicleLocal);
}

/// Wraps into (-pi, pi].
inline double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, two_pi);
  if (r < 0) r += two_pi;
  r -= std::numbers::pi;
  return r == -std::numbers::pi ? std::numbers::pi : r;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // azimuth, normalized to (-pi, pi]

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}
};

inline Eigen::Matrix2d rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

/// Vehicle-local point to world frame for a vehicle at `pose`.
inline Eigen::Vector2d local_to_world(const Pose2D& pose, const Eigen::Vector2d& p) {
  return rotation_matrix(pose.theta) * p + Eigen::Vector2d(pose.x, pose.y);
}

inline Eigen::Vector2d world_to_local(const Pose2D& pose, const Eigen::Vector2d& p) {
  return rotation_matrix(pose.theta).transpose() * (p - Eigen::Vector2d(pose.x, pose.y));
}

struct CameraCalibration {
  double fu = 800.0;  // focal lengths, px
  double fv = 800.0;
  double cu = 320.0;  // principal point, px
  double cv = 240.0;
  double h = 1.2;     // height above ground, m
  double pitch = 0.05;
  double yaw = 0.0;

  void validate() const {
    const double half_pi = std::numbers::pi / 2.0;
    std::string why;
    if (!(fu > 0) || !(fv > 0)) why = "focal lengths must be positive";
    else if (!(h > 0)) why = "camera height must be positive";
    else if (!(std::abs(pitch) < half_pi)) why = "|pitch| must be below pi/2";
    else if (!(std::abs(yaw) < half_pi)) why = "|yaw| must be below pi/2";
    else if (!std::isfinite(cu) || !std::isfinite(cv)) why = "principal point must be finite";
    if (!why.empty()) throw Error(ErrorCode::InvalidCalibration, why);
  }
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

struct GroundPoint {
  double x = 0.0;  // lateral, m
  double y = 0.0;  // forward, m
};

/// Image-to-ground homogeneous transform. Applied to [u, v, 1, 1] it yields a
/// homogeneous ground point whose third coordinate normalizes to -h.
inline Eigen::Matrix4d build_ipm_matrix(const CameraCalibration& calib) {
  calib.validate();
  const double c1 = std::cos(calib.pitch), s1 = std::sin(calib.pitch);
  const double c2 = std::cos(calib.yaw), s2 = std::sin(calib.yaw);
  const double h = calib.h, fu = calib.fu, fv = calib.fv, cu = calib.cu, cv = calib.cv;
  Eigen::Matrix4d t;
  t << -h / fu * c2, h / fv * s1 * s2, h / fu * cu * c2 - h / fv * cv * s1 * s2 - h * c1 * s2, 0.0,
       h / fu * s2, h / fv * s1 * c2, -h / fu * cu * s2 - h / fv * cv * s1 * c2 - h * c1 * c2, 0.0,
       0.0, h / fv * c1, -h / fv * cv * c1 + h * s1, 0.0,
       0.0, -c1 / fv, cv * c1 / fv - s1, 0.0;
  return t;
}

inline constexpr double kHomogeneousEpsilon = 1e-9;

/// Image row of the horizon. Depends on pitch only (roll is fixed at zero).
inline double horizon_row(const CameraCalibration& calib) {
  return calib.cv - calib.fv * std::tan(calib.pitch);
}

inline GroundPoint pixel_to_ground(const Eigen::Matrix4d& ipm, PixelCoord p) {
  const Eigen::Vector4d g = ipm * Eigen::Vector4d(p.u, p.v, 1.0, 1.0);
  // w < 0 strictly below the horizon; at or above it the viewing ray misses the ground.
  if (!(g(3) < -kHomogeneousEpsilon)) {
    throw Error(ErrorCode::NoGroundIntersection, "pixel at or above the horizon");
  }
  return {g(0) / g(3), g(1) / g(3)};
}

inline GroundPoint pixel_to_ground(PixelCoord p, const CameraCalibration& calib) {
  return pixel_to_ground(build_ipm_matrix(calib), p);
}

/// Forward pinhole projection of a ground point.
inline PixelCoord ground_to_pixel(GroundPoint g, const CameraCalibration& calib) {
  calib.validate();
  const double cy = std::cos(calib.yaw), sy = std::sin(calib.yaw);
  const double cp = std::cos(calib.pitch), sp = std::sin(calib.pitch);
  const double z = -calib.h;
  const double xr = cy * g.x - sy * g.y;
  const double yr = sy * g.x + cy * g.y;
  const double forward = cp * yr - sp * z;
  const double down = -(sp * yr + cp * z);
  if (!(forward > kHomogeneousEpsilon)) {
    throw Error(ErrorCode::NoGroundIntersection, "ground point behind the camera");
  }
  return {calib.cu + calib.fu * xr / forward, calib.cv + calib.fv * down / forward};
}

/// 3x3 homography ground (x, y, 1) -> image (u, v, 1), the inverse of the planar part
/// of the IPM matrix.
inline Eigen::Matrix3d ground_to_image_homography(const Eigen::Matrix4d& ipm) {
  Eigen::Matrix3d image_to_ground;
  for (int c = 0; c < 2; ++c) {
    image_to_ground(0, c) = ipm(0, c);
    image_to_ground(1, c) = ipm(1, c);
    image_to_ground(2, c) = ipm(3, c);
  }
  image_to_ground(0, 2) = ipm(0, 2) + ipm(0, 3);
  image_to_ground(1, 2) = ipm(1, 2) + ipm(1, 3);
  image_to_ground(2, 2) = ipm(3, 2) + ipm(3, 3);
  return image_to_ground.inverse();
}

/// Metric bird's-eye raster over the ground plane. Row 0 is the farthest row.
struct BirdEyeGrid {
  double x_min = -6.0;
  double x_max = 6.0;
  double y_min = 6.0;
  double y_max = 36.0;
  double resolution = 0.05;  // m per cell, both axes

  int cols() const { return static_cast<int>(std::lround((x_max - x_min) / resolution)); }
  int rows() const { return static_cast<int>(std::lround((y_max - y_min) / resolution)); }

  double x_of(double col) const { return x_min + (col + 0.5) * resolution; }
  double y_of(double row) const { return y_max - (row + 0.5) * resolution; }
  double col_of(double x) const { return (x - x_min) / resolution - 0.5; }
  double row_of(double y) const { return (y_max - y) / resolution - 0.5; }

  void validate() const {
    if (!(resolution > 0) || !(x_max > x_min) || !(y_max > y_min) || cols() < 1 || rows() < 1) {
      throw Error(ErrorCode::ValidationError, "bird's-eye grid must have positive extent");
    }
  }
};

}  // namespace coop
