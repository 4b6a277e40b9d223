#pragma once

// Synthetic road frames with ground truth, rendered through the same pinhole model
// as the perception stack.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coop/bezier.hpp"
#include "coop/camera_geometry.hpp"
#include "coop/error.hpp"
#include "coop/image.hpp"
#include "coop/image_pipeline.hpp"
#include "coop/lane_udt.hpp"

namespace coop {

struct MarkingSpec {
  BezierCurve curve;  // vehicle-frame ground meters, monotone in y
  double width = 0.15;
  MarkingColor color = MarkingColor::White;
};

struct NoiseSpec {
  double gaussian_sigma = 0.0;      // luminance units
  int shadow_bands = 0;             // full-width bands across the road
  double shadow_factor = 0.6;
  double gap_fraction = 0.0;        // fraction of each marking removed as dash gaps
  double brightness_gradient = 0.0; // relative left-to-right luminance ramp

  void validate() const {
    if (gaussian_sigma < 0 || shadow_bands < 0 || shadow_factor < 0 || gap_fraction < 0 ||
        gap_fraction >= 1 || std::abs(brightness_gradient) >= 1) {
      throw Error(ErrorCode::ValidationError, "noise parameters out of range");
    }
  }
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  CameraCalibration calib;
  std::vector<MarkingSpec> markings;
  double road_luminance = 90.0;
  double marking_luminance = 220.0;
  double sky_luminance = 170.0;
  NoiseSpec noise;
  std::uint64_t seed = 1;
};

struct TruthMarking {
  BezierCurve curve;
  MarkingColor color = MarkingColor::White;
  bool in_view = true;
};

struct GroundTruth {
  std::vector<TruthMarking> markings;
};

namespace detail {

// x(y) lookup table for a y-monotone marking.
struct MarkingTable {
  double y0 = 0, y1 = 0, step = 0.02;
  std::vector<double> x, slope;
  double half_width = 0.075;
  std::vector<std::pair<double, double>> gaps;  // removed [y_start, y_end)

  bool covers(double gx, double gy) const {
    if (gy < y0 || gy > y1) return false;
    const double f = (gy - y0) / step;
    const std::size_t i = std::min(static_cast<std::size_t>(f), x.size() - 2);
    const double w = f - i;
    const double cx = x[i] * (1 - w) + x[i + 1] * w;
    const double sl = slope[i];
    if (std::abs(gx - cx) > half_width * std::sqrt(1 + sl * sl)) return false;
    for (const auto& [a, b] : gaps) {
      if (gy >= a && gy < b) return false;
    }
    return true;
  }
};

inline MarkingTable build_table(const MarkingSpec& m, double gap_fraction, std::mt19937_64& rng) {
  MarkingTable tab;
  tab.half_width = m.width / 2;
  const auto poly = sample_curve(m.curve, 512);
  tab.y0 = std::min(poly.front().y(), poly.back().y());
  tab.y1 = std::max(poly.front().y(), poly.back().y());
  const int n = std::max(2, static_cast<int>((tab.y1 - tab.y0) / tab.step) + 2);
  tab.x.resize(n);
  tab.slope.resize(n);
  for (int i = 0; i < n; ++i) {
    const double y = std::min(tab.y0 + i * tab.step, tab.y1);
    tab.x[i] = lateral_at(m.curve, y, 512).value_or(poly.front().x());
  }
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - 1), b = std::min(n - 1, i + 1);
    tab.slope[i] = b > a ? (tab.x[b] - tab.x[a]) / ((b - a) * tab.step) : 0.0;
  }
  if (gap_fraction > 0) {
    std::uniform_real_distribution<double> cycle_len(6.0, 12.0), unit(0.0, 1.0);
    const double cycle = cycle_len(rng);
    double y = tab.y0 - unit(rng) * cycle;
    while (y < tab.y1) {
      const double gap = gap_fraction * cycle;
      tab.gaps.emplace_back(y + cycle - gap, y + cycle);
      y += cycle;
    }
  }
  return tab;
}

inline bool in_view(const MarkingSpec& m, const SceneSpec& spec) {
  int inside = 0, total = 0;
  for (const auto& p : sample_curve(m.curve, 64)) {
    if (p.y() < 6.0 || p.y() > 26.0) continue;
    ++total;
    try {
      const PixelCoord px = ground_to_pixel({p.x(), p.y()}, spec.calib);
      if (px.u >= 0 && px.u < spec.width && px.v >= 0 && px.v < spec.height) ++inside;
    } catch (const Error&) {
    }
  }
  return total > 0 && 2 * inside >= total;
}

}  // namespace detail

struct RenderedFrame {
  GrayImage image;
  GroundTruth truth;
};

inline RenderedFrame render_frame(const SceneSpec& spec) {
  spec.calib.validate();
  spec.noise.validate();
  if (spec.width < kMinFrameSide || spec.height < kMinFrameSide) {
    throw Error(ErrorCode::ValidationError, "frame must be at least 16x16 pixels");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<detail::MarkingTable> tables;
  RenderedFrame out{GrayImage(spec.width, spec.height), {}};
  for (const auto& m : spec.markings) {
    tables.push_back(detail::build_table(m, spec.noise.gap_fraction, rng));
    out.truth.markings.push_back({m.curve, m.color, detail::in_view(m, spec)});
  }

  std::vector<std::pair<double, double>> shadows;
  {
    std::uniform_real_distribution<double> start(6.0, 36.0), len(1.0, 4.0);
    for (int i = 0; i < spec.noise.shadow_bands; ++i) {
      const double s = start(rng);
      shadows.emplace_back(s, s + len(rng));
    }
  }

  const Eigen::Matrix4d ipm = build_ipm_matrix(spec.calib);
  std::normal_distribution<double> noise(0.0, std::max(spec.noise.gaussian_sigma, 1e-12));
  constexpr double offsets[2] = {0.25, 0.75};
  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      double lum = 0.0;
      for (double dv : offsets) {
        for (double du : offsets) {
          const Eigen::Vector4d g = ipm * Eigen::Vector4d(u + du - 0.5, v + dv - 0.5, 1.0, 1.0);
          if (!(g(3) < -kHomogeneousEpsilon)) {
            lum += spec.sky_luminance;
            continue;
          }
          const double gx = g(0) / g(3), gy = g(1) / g(3);
          double l = spec.road_luminance;
          for (const auto& tab : tables) {
            if (tab.covers(gx, gy)) {
              l = spec.marking_luminance;
              break;
            }
          }
          for (const auto& [a, b] : shadows) {
            if (gy >= a && gy < b) l *= spec.noise.shadow_factor;
          }
          lum += l;
        }
      }
      lum /= 4.0;
      lum *= 1.0 + spec.noise.brightness_gradient * (2.0 * u / spec.width - 1.0);
      if (spec.noise.gaussian_sigma > 0) lum += noise(rng);
      out.image(u, v) = static_cast<std::uint8_t>(std::clamp(std::lround(lum), 0L, 255L));
    }
  }
  return out;
}

/// Bird's-eye columns inside `roi` crossed by each in-view truth marking.
inline std::vector<std::uint8_t> column_occupancy(const GroundTruth& truth, const BirdEyeGrid& grid,
                                                  const CellRect& roi) {
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(std::max(roi.width(), 0)), 0);
  for (const auto& m : truth.markings) {
    if (!m.in_view) continue;
    for (int r = roi.row0; r < roi.row1; ++r) {
      const auto x = lateral_at(m.curve, grid.y_of(r));
      if (!x) continue;
      const int c = static_cast<int>(std::lround(grid.col_of(*x)));
      if (c >= roi.col0 && c < roi.col1) occ[c - roi.col0] = 1;
    }
  }
  return occ;
}

/// Lane-boundary markings of a road seen from a vehicle offset laterally by
/// `ego_offset` (m, positive right) with heading error `heading` (rad) and signed
/// curvature radius `radius` (0 for straight, positive curving right).
inline std::vector<MarkingSpec> lane_markings(int lanes_left, int lanes_right, double lane_width,
                                              double ego_offset, double heading, double radius,
                                              double length = 60.0, double width = 0.15) {
  std::vector<MarkingSpec> out;
  const double b = std::tan(heading);
  const double c = radius != 0.0 ? 1.0 / (2.0 * radius) : 0.0;
  for (int k = -lanes_left; k <= lanes_right; ++k) {
    if (k == 0) continue;
    const double a = (k > 0 ? k - 0.5 : k + 0.5) * lane_width - ego_offset;
    MarkingSpec m;
    m.width = width;
    if (c == 0.0) {
      m.curve = BezierCurve({Point2(a, 0.0), Point2(a + b * length, length)});
    } else {
      const double half = length / 2;
      m.curve = BezierCurve({Point2(a, 0.0), Point2(a + b * half, half),
                              Point2(a + b * length + c * length * length, length)});
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Noise regime of the synthetic evaluation corpus; every frame draws its scene from
/// these ranges with its own seed.
struct CorpusSpec {
  int frames = 500;
  std::uint64_t seed = 2024;
  CameraCalibration calib;
  double lane_width_min = 3.3, lane_width_max = 3.7;
  double ego_offset_max = 0.3;     // m
  double heading_max = 0.01;       // rad
  double curved_fraction = 0.5;
  double radius_min = 400.0, radius_max = 1500.0;
  double sigma_min = 3.0, sigma_max = 12.0;
  int shadow_bands_max = 2;
  double gap_fraction_max = 0.3;
  double gradient_max = 0.2;
};

inline SceneSpec corpus_scene(const CorpusSpec& corpus, int index) {
  std::mt19937_64 rng(corpus.seed * 1000003ull + static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  SceneSpec spec;
  spec.calib = corpus.calib;
  const double lane_width = range(corpus.lane_width_min, corpus.lane_width_max);
  const double offset = range(-corpus.ego_offset_max, corpus.ego_offset_max);
  const double heading = range(-corpus.heading_max, corpus.heading_max);
  double radius = 0.0;
  if (unit(rng) < corpus.curved_fraction) {
    radius = range(corpus.radius_min, corpus.radius_max) * (unit(rng) < 0.5 ? -1.0 : 1.0);
  }
  spec.markings = lane_markings(1, 1, lane_width, offset, heading, radius);
  spec.noise.gaussian_sigma = range(corpus.sigma_min, corpus.sigma_max);
  spec.noise.shadow_bands = static_cast<int>(range(0.0, corpus.shadow_bands_max + 0.999));
  spec.noise.gap_fraction = range(0.0, corpus.gap_fraction_max);
  spec.noise.brightness_gradient = range(-corpus.gradient_max, corpus.gradient_max);
  spec.seed = rng();
  return spec;
}

inline void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "id,order,color,in_view,x0,y0,x1,y1,x2,y2,x3,y3\n";
  char buf[64];
  for (std::size_t i = 0; i < truth.markings.size(); ++i) {
    const auto& m = truth.markings[i];
    out << i << ',' << m.curve.degree() + 1 << ',' << to_string(m.color) << ','
        << (m.in_view ? 1 : 0);
    for (int k = 0; k < 4; ++k) {
      if (k < static_cast<int>(m.curve.control.size())) {
        std::snprintf(buf, sizeof buf, ",%.9g,%.9g", m.curve.control[k].x(), m.curve.control[k].y());
        out << buf;
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
}

inline GroundTruth read_truth_csv(std::istream& in) {
  GroundTruth truth;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty truth file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 12) cells.emplace_back();
    try {
      const int order = std::stoi(cells[1]);
      if (order < 2 || order > 4) throw Error(ErrorCode::IoError, "bad order in truth file");
      std::vector<Point2> ctrl;
      for (int k = 0; k < order; ++k) ctrl.emplace_back(std::stod(cells[4 + 2 * k]), std::stod(cells[5 + 2 * k]));
      TruthMarking m;
      m.curve = BezierCurve(std::move(ctrl));
      m.color = cells[2] == "yellow" ? MarkingColor::Yellow : MarkingColor::White;
      m.in_view = cells[3] == "1";
      truth.markings.push_back(std::move(m));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::IoError, "malformed truth row: " + line);
    }
  }
  return truth;
}

inline GroundTruth read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_truth_csv(in);
}

}  // namespace coop
