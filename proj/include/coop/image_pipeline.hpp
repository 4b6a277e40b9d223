#pragma once

// Two-layer ROI, bird's-eye warping, the hybrid anisotropic filter and extraction of
// the candidate lane-marking sample space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coop/camera_geometry.hpp"
#include "coop/error.hpp"
#include "coop/image.hpp"

namespace coop {

/// Half-open pixel/cell rectangle [col0, col1) x [row0, row1).
struct CellRect {
  int col0 = 0, row0 = 0, col1 = 0, row1 = 0;

  int width() const { return col1 - col0; }
  int height() const { return row1 - row0; }
  bool empty() const { return col1 <= col0 || row1 <= row0; }
  bool contains(int c, int r) const { return c >= col0 && c < col1 && r >= row0 && r < row1; }
  bool operator==(const CellRect&) const = default;
};

/// First ROI layer, in the perspective image.
struct StaticRoi {
  double k = 0.9;
  double l = 0.5;
  double center_u = 0.0;
  double center_v = 0.0;
  CellRect rect;  // clipped to the image
};

inline StaticRoi compute_static_roi(const GrayImage& img, double k, double l, double vpx,
                                    double vpy, double dx, double dy) {
  require_frame(img);
  if (!(k > 0 && k <= 1) || !(l > 0 && l <= 1)) {
    throw Error(ErrorCode::DomainError, "static ROI coefficients must lie in (0, 1]");
  }
  StaticRoi roi{k, l, vpx + dx, vpy + dy, {}};
  const double w = k * img.width(), h = l * img.height();
  const auto lo = [](double v) { return static_cast<int>(std::lround(v)); };
  roi.rect.col0 = std::max(0, lo(roi.center_u - w / 2));
  roi.rect.col1 = std::min(img.width(), lo(roi.center_u + w / 2));
  roi.rect.row0 = std::max(0, lo(roi.center_v - h / 2));
  roi.rect.row1 = std::min(img.height(), lo(roi.center_v + h / 2));
  if (roi.rect.empty()) throw Error(ErrorCode::EmptyRoi, "static ROI does not intersect the image");
  return roi;
}

/// Default placement: principal point as vanishing point, shifted down by a tenth
/// of the frame height.
inline StaticRoi default_static_roi(const GrayImage& img, const CameraCalibration& calib,
                                    double k = 0.9, double l = 0.5) {
  return compute_static_roi(img, k, l, calib.cu, calib.cv, 0.0, 0.1 * img.height());
}

/// Second ROI layer, in bird's-eye cells. Anchored at the near edge of the raster.
struct DynamicRoi {
  double width_px = 200.0;
  double height_px = 400.0;
  double deviation_coeff = 1.0;  // a: how strongly the ROI follows the lane offset
  double speed_coeff = 0.8;      // b: extra rows per m/s
  double height_min_px = 200.0;
  double height_max_px = 600.0;
};

struct DynamicRoiUpdate {
  double lane_change_width_gain = 1.5;
  double lane_change_deviation_gain = 0.5;
};

inline DynamicRoi compute_dynamic_roi(double speed, bool lane_change_signal,
                                      const DynamicRoi& base,
                                      const DynamicRoiUpdate& update = {}) {
  if (!(speed >= 0)) throw Error(ErrorCode::DomainError, "speed must be non-negative");
  DynamicRoi roi = base;
  if (lane_change_signal) {
    roi.width_px = base.width_px * update.lane_change_width_gain;
    roi.deviation_coeff = base.deviation_coeff * update.lane_change_deviation_gain;
  }
  roi.height_px =
      std::clamp(base.height_px + base.speed_coeff * speed, base.height_min_px, base.height_max_px);
  return roi;
}

/// Cell rectangle of the dynamic ROI. `lane_offset_m` is the ego offset from its lane
/// center (positive to the right); the ROI is shifted back by a * offset.
inline CellRect dynamic_roi_rect(const DynamicRoi& roi, const BirdEyeGrid& grid,
                                 double lane_offset_m = 0.0) {
  grid.validate();
  const double center = grid.cols() / 2.0 - roi.deviation_coeff * lane_offset_m / grid.resolution;
  CellRect r;
  r.col0 = std::max(0, static_cast<int>(std::lround(center - roi.width_px / 2)));
  r.col1 = std::min(grid.cols(), static_cast<int>(std::lround(center + roi.width_px / 2)));
  r.row1 = grid.rows();
  r.row0 = std::max(0, grid.rows() - static_cast<int>(std::lround(roi.height_px)));
  return r;
}

struct BirdEyeImage {
  GrayImage image;
  GrayImage valid;  // 1 where the cell maps inside the static ROI
  BirdEyeGrid grid;
};

/// Inverse perspective warp with bilinear sampling; cells that fall outside the
/// static ROI stay 0.
inline BirdEyeImage warp_to_birdeye(const GrayImage& img, const CameraCalibration& calib,
                                    const StaticRoi& roi, const BirdEyeGrid& grid = {}) {
  require_frame(img);
  grid.validate();
  const Eigen::Matrix3d to_image = ground_to_image_homography(build_ipm_matrix(calib));
  // sign of the homogeneous scale for points in front of the camera
  const Eigen::Vector3d ref = to_image * Eigen::Vector3d(0.0, 10.0, 1.0);
  const double front_sign = ref(2) > 0 ? 1.0 : -1.0;

  BirdEyeImage out{GrayImage(grid.cols(), grid.rows()), GrayImage(grid.cols(), grid.rows()), grid};
  const double umax = roi.rect.col1 - 1, vmax = roi.rect.row1 - 1;
  for (int r = 0; r < grid.rows(); ++r) {
    const double y = grid.y_of(r);
    for (int c = 0; c < grid.cols(); ++c) {
      const double x = grid.x_of(c);
      const double hw = to_image(2, 0) * x + to_image(2, 1) * y + to_image(2, 2);
      if (!(hw * front_sign > kHomogeneousEpsilon)) continue;
      const double u = (to_image(0, 0) * x + to_image(0, 1) * y + to_image(0, 2)) / hw;
      const double v = (to_image(1, 0) * x + to_image(1, 1) * y + to_image(1, 2)) / hw;
      if (!(u >= roi.rect.col0 && u <= umax && v >= roi.rect.row0 && v <= vmax)) continue;
      const int u0 = static_cast<int>(u), v0 = static_cast<int>(v);
      const int u1 = std::min(u0 + 1, roi.rect.col1 - 1);
      const int v1 = std::min(v0 + 1, roi.rect.row1 - 1);
      const double fu = u - u0, fv = v - v0;
      const double top = img(u0, v0) * (1 - fu) + img(u1, v0) * fu;
      const double bot = img(u0, v1) * (1 - fu) + img(u1, v1) * fu;
      out.image(c, r) = static_cast<std::uint8_t>(std::clamp(top * (1 - fv) + bot * fv + 0.5, 0.0, 255.0));
      out.valid(c, r) = 1;
    }
  }
  return out;
}

/// Hybrid filter: Mexican hat across the road (u) and Gaussian along it (v), steered
/// by theta as cos(theta) * K0 + sin(theta) * K90, with K90 the same pair rotated by
/// a quarter turn. Each term is separable.
struct AnisotropicKernel {
  double theta = 0.0;
  double sigma_u = 1.5;
  double sigma_v = 50.0;
  int radius = 150;
  std::vector<double> hat;     // zero-sum, length 2 * radius_hat + 1
  std::vector<double> smooth;  // unit-sum, length 2 * radius_smooth + 1
  bool truncated = false;      // requested radius below 3 sigma

  int hat_radius() const { return static_cast<int>(hat.size() / 2); }
  int smooth_radius() const { return static_cast<int>(smooth.size() / 2); }
};

inline AnisotropicKernel build_kernel(double theta, double sigma_u, double sigma_v, int radius) {
  if (!(sigma_u > 0) || !(sigma_v > 0)) throw Error(ErrorCode::DomainError, "sigmas must be positive");
  if (radius < 1) throw Error(ErrorCode::DomainError, "kernel radius must be positive");
  AnisotropicKernel k;
  k.theta = theta;
  k.sigma_u = sigma_u;
  k.sigma_v = sigma_v;
  k.radius = radius;
  const int need_u = static_cast<int>(std::ceil(3.0 * sigma_u));
  const int need_v = static_cast<int>(std::ceil(3.0 * sigma_v));
  k.truncated = radius < std::max(need_u, need_v);
  const int ru = std::min(need_u, radius), rv = std::min(need_v, radius);

  k.hat.resize(2 * ru + 1);
  const double su2 = sigma_u * sigma_u;
  double mean = 0.0;
  for (int i = -ru; i <= ru; ++i) {
    const double u2 = static_cast<double>(i) * i;
    k.hat[i + ru] = (1.0 / su2) * (1.0 - u2 / su2) * std::exp(-u2 / (2.0 * su2));
    mean += k.hat[i + ru];
  }
  mean /= static_cast<double>(k.hat.size());
  for (double& t : k.hat) t -= mean;

  k.smooth.resize(2 * rv + 1);
  const double sv2 = sigma_v * sigma_v;
  double sum = 0.0;
  for (int j = -rv; j <= rv; ++j) {
    k.smooth[j + rv] = std::exp(-static_cast<double>(j) * j / (2.0 * sv2));
    sum += k.smooth[j + rv];
  }
  for (double& t : k.smooth) t /= sum;
  return k;
}

/// sigma_u from marking width, sigma_v from ROI height.
inline double sigma_u_for_marking(double marking_width_px) { return marking_width_px / 2.0; }
inline double sigma_v_for_roi(double roi_height_px) { return roi_height_px / 8.0; }

namespace detail {

// Separable pass with edge replication; taps are symmetric so correlation == convolution.
inline std::vector<double> convolve_rows(const std::vector<double>& src, int w, int h,
                                         const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<double> dst(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    const double* in = &src[static_cast<std::size_t>(y) * w];
    double* out = &dst[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xi = std::clamp(x + i, 0, w - 1);
        acc += taps[i + r] * in[xi];
      }
      out[x] = acc;
    }
  }
  return dst;
}

inline std::vector<double> convolve_cols(const std::vector<double>& src, int w, int h,
                                         const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<double> dst(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    double* out = &dst[static_cast<std::size_t>(y) * w];
    for (int j = -r; j <= r; ++j) {
      const int yj = std::clamp(y + j, 0, h - 1);
      const double t = taps[j + r];
      const double* in = &src[static_cast<std::size_t>(yj) * w];
      for (int x = 0; x < w; ++x) out[x] += t * in[x];
    }
  }
  return dst;
}

}  // namespace detail

template <typename T>
FloatImage apply_kernel(const Image<T>& img, const AnisotropicKernel& k) {
  const int w = img.width(), h = img.height();
  std::vector<double> src(img.pixels().begin(), img.pixels().end());
  std::vector<double> acc(src.size(), 0.0);
  const double c = std::cos(k.theta), s = std::sin(k.theta);
  if (c != 0.0) {
    auto t = detail::convolve_rows(detail::convolve_cols(src, w, h, k.smooth), w, h, k.hat);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * t[i];
  }
  if (s != 0.0) {
    auto t = detail::convolve_rows(detail::convolve_cols(src, w, h, k.hat), w, h, k.smooth);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * t[i];
  }
  FloatImage out(w, h);
  auto px = out.pixels();
  for (std::size_t i = 0; i < acc.size(); ++i) px[i] = static_cast<float>(acc[i]);
  return out;
}

/// Mean-relative thresholds: a column is a candidate when its summed response exceeds
/// mean + column_k * stddev of the ROI column profile; a pixel in a candidate column is
/// admitted when its response exceeds the ROI pixel mean + pixel_k * stddev, with
/// weight equal to the excess over the mean. A cluster whose strongest pixel excess
/// stays below `min_cluster_peak` is dropped as texture.
struct ThresholdRule {
  double column_k = 1.0;
  double pixel_k = 1.0;
  int max_gap_cols = 2;  // candidate runs closer than this merge into one cluster
  double min_cluster_peak = 15.0;
};

struct SamplePoint {
  int col = 0, row = 0;  // bird's-eye cell
  double x = 0.0, y = 0.0;  // ground meters
  double val = 0.0;
  int cluster = -1;
};

struct ColumnCluster {
  int col0 = 0, col1 = 0;  // half-open
  double peak_profile = 0.0;
};

struct SampleSpace {
  std::vector<SamplePoint> points;
  std::vector<ColumnCluster> clusters;
  std::vector<double> column_profile;  // indexed from roi.col0
  BirdEyeGrid grid;
  CellRect roi;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// `filtered` is in grid coordinates; only cells inside `roi` are read.
inline SampleSpace extract_sample_space(const FloatImage& filtered, const CellRect& roi,
                                        const BirdEyeGrid& grid, const ThresholdRule& rule = {}) {
  SampleSpace omega;
  omega.grid = grid;
  CellRect r = roi;
  r.col0 = std::max(r.col0, 0);
  r.row0 = std::max(r.row0, 0);
  r.col1 = std::min(r.col1, filtered.width());
  r.row1 = std::min(r.row1, filtered.height());
  omega.roi = r;
  if (r.empty()) return omega;

  const int w = r.width();
  omega.column_profile.assign(w, 0.0);
  double sum = 0.0, n = static_cast<double>(w) * r.height();
  for (int y = r.row0; y < r.row1; ++y) {
    for (int x = r.col0; x < r.col1; ++x) {
      omega.column_profile[x - r.col0] += filtered(x, y);
      sum += filtered(x, y);
    }
  }
  const double pix_mean = sum / n;
  double pix_var = 0.0;
  for (int y = r.row0; y < r.row1; ++y)
    for (int x = r.col0; x < r.col1; ++x) pix_var += (filtered(x, y) - pix_mean) * (filtered(x, y) - pix_mean);
  const double pix_std = std::sqrt(pix_var / n);

  double col_mean = 0.0;
  for (double p : omega.column_profile) col_mean += p;
  col_mean /= w;
  double col_var = 0.0;
  for (double p : omega.column_profile) col_var += (p - col_mean) * (p - col_mean);
  const double col_thresh = col_mean + rule.column_k * std::sqrt(col_var / w);
  const double pix_thresh = pix_mean + rule.pixel_k * pix_std;

  // contiguous candidate runs, merging short gaps
  for (int c = 0; c < w; ++c) {
    if (!(omega.column_profile[c] > col_thresh)) continue;
    const int col = c + r.col0;
    if (!omega.clusters.empty() && col - omega.clusters.back().col1 <= rule.max_gap_cols) {
      omega.clusters.back().col1 = col + 1;
      omega.clusters.back().peak_profile =
          std::max(omega.clusters.back().peak_profile, omega.column_profile[c]);
    } else {
      omega.clusters.push_back({col, col + 1, omega.column_profile[c]});
    }
  }

  std::vector<ColumnCluster> kept;
  for (const auto& cl : omega.clusters) {
    std::vector<SamplePoint> pts;
    double peak = 0.0;
    for (int y = r.row0; y < r.row1; ++y) {
      for (int x = cl.col0; x < cl.col1; ++x) {
        if (!(omega.column_profile[x - r.col0] > col_thresh)) continue;
        const double v = filtered(x, y);
        if (!(v > pix_thresh)) continue;
        pts.push_back({x, y, grid.x_of(x), grid.y_of(y), v - pix_mean, static_cast<int>(kept.size())});
        peak = std::max(peak, v - pix_mean);
      }
    }
    if (pts.empty() || peak < rule.min_cluster_peak) continue;
    kept.push_back(cl);
    omega.points.insert(omega.points.end(), pts.begin(), pts.end());
  }
  omega.clusters = std::move(kept);
  return omega;
}

}  // namespace coop
