#pragma once

// Uncertain deformation templates: Bezier lane models of adaptive order scored by
// pixel consistency and curve likelihood, solved by RANSAC hypothesis-and-test.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coop/bezier.hpp"
#include "coop/camera_geometry.hpp"
#include "coop/image.hpp"
#include "coop/image_pipeline.hpp"

namespace coop {

enum class MarkingColor { White, Yellow };

inline double color_factor(MarkingColor c) { return c == MarkingColor::Yellow ? 1.5 : 1.0; }
inline const char* to_string(MarkingColor c) { return c == MarkingColor::Yellow ? "yellow" : "white"; }

struct CredibilityWeights {
  double k1 = 0.5;   // length
  double k2 = 0.5;   // angle
  double kL = 0.02;  // pixel consistency
  double kQ = 1.0;   // curve likelihood

  void validate() const {
    if (k1 < 0 || k2 < 0 || kL < 0 || kQ < 0 || !(kL + kQ > 0)) {
      throw Error(ErrorCode::ValidationError, "credibility weights must be >= 0 with kL + kQ > 0");
    }
  }
};

struct UncertainDeformationTemplate {
  int order = 2;  // N in [2, 4]; the curve has degree N - 1
  BezierCurve curve;
  MarkingColor color = MarkingColor::White;
  double s = 0.0;                  // credibility, unbounded above
  double pixel_consistency = 0.0;  // normalized L
  double likelihood = 0.0;         // Q
  std::size_t support = 0;
};

/// Cells of a bird's-eye grid lying within `band` cells of a curve. Reused across
/// hypotheses through a generation stamp.
class CurveMask {
 public:
  CurveMask(int cols, int rows)
      : cols_(cols), rows_(rows), stamp_(static_cast<std::size_t>(cols) * rows, 0),
        param_(static_cast<std::size_t>(cols) * rows, 0.0f) {}

  template <typename Eval>
  void mark(Eval&& eval, double t0, double t1, const BirdEyeGrid& grid, double band_cells,
            double curve_length_m) {
    if (++gen_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0u);
      gen_ = 1;
    }
    const int steps = std::max(8, static_cast<int>(std::ceil(curve_length_m / (0.5 * grid.resolution))));
    const int reach = static_cast<int>(std::ceil(band_cells));
    const double band2 = band_cells * band_cells + 1e-9;
    for (int i = 0; i <= steps; ++i) {
      const double t = t0 + (t1 - t0) * i / steps;
      const Point2 p = eval(t);
      const double fc = grid.col_of(p.x()), fr = grid.row_of(p.y());
      const int cc = static_cast<int>(std::lround(fc)), cr = static_cast<int>(std::lround(fr));
      for (int dr = -reach; dr <= reach; ++dr) {
        const int r = cr + dr;
        if (r < 0 || r >= rows_) continue;
        for (int dc = -reach; dc <= reach; ++dc) {
          const int c = cc + dc;
          if (c < 0 || c >= cols_) continue;
          const double ex = c - fc, ey = r - fr;
          if (ex * ex + ey * ey > band2) continue;
          const std::size_t idx = static_cast<std::size_t>(r) * cols_ + c;
          stamp_[idx] = gen_;
          param_[idx] = static_cast<float>(t);
        }
      }
    }
  }

  bool contains(int col, int row) const {
    if (col < 0 || row < 0 || col >= cols_ || row >= rows_) return false;
    return stamp_[static_cast<std::size_t>(row) * cols_ + col] == gen_;
  }
  double param(int col, int row) const { return param_[static_cast<std::size_t>(row) * cols_ + col]; }

 private:
  int cols_, rows_;
  std::vector<std::uint32_t> stamp_;
  std::vector<float> param_;
  std::uint32_t gen_ = 0;
};

namespace detail {

// Power-basis evaluation valid for any t, used to extend hypotheses past their samples.
inline Point2 bezier_eval_any(const BezierCurve& curve, double t) {
  const int n = curve.degree();
  Point2 p = Point2::Zero();
  for (int i = 0; i <= n; ++i) {
    p += curve.control[i] * (binomial(n, i) * std::pow(1.0 - t, n - i) * std::pow(t, i));
  }
  return p;
}

inline double polyline_length(const BezierCurve& c, double t0, double t1) {
  double len = 0.0;
  Point2 prev = bezier_eval_any(c, t0);
  for (int i = 1; i <= 32; ++i) {
    const Point2 p = bezier_eval_any(c, t0 + (t1 - t0) * i / 32.0);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

}  // namespace detail

/// L(S) = c * sum(val) over sample pixels within `band_cells` of the curve.
inline double pixel_consistency(const BezierCurve& curve, std::span<const SamplePoint> samples,
                                const BirdEyeGrid& grid, double c, double band_cells = 1.0) {
  if (samples.empty()) return 0.0;
  CurveMask mask(grid.cols(), grid.rows());
  mask.mark([&](double t) { return bezier_eval(curve, t); }, 0.0, 1.0, grid, band_cells,
            detail::polyline_length(curve, 0.0, 1.0));
  double sum = 0.0;
  for (const auto& p : samples) {
    if (mask.contains(p.col, p.row)) sum += p.val;
  }
  return c * sum;
}

inline double pixel_consistency(const BezierCurve& curve, const SampleSpace& omega, double c,
                                double band_cells = 1.0) {
  return pixel_consistency(curve, omega.points, omega.grid, c, band_cells);
}

/// Q(S) = k1 * l / v + k2 / (N - 2) * sum cos(pi - theta_i) over interior samples,
/// with l the farthest sample-pair distance and theta_i the angle at sample i.
inline double curve_likelihood(std::span<const Point2> samples, double v,
                               const CredibilityWeights& w) {
  const std::size_t n = samples.size();
  double l = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) l = std::max(l, (samples[i] - samples[j]).norm());
  double q = v > 0 ? w.k1 * l / v : 0.0;
  if (n >= 3) {
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Point2 a = samples[i - 1] - samples[i], b = samples[i + 1] - samples[i];
      const double na = a.norm(), nb = b.norm();
      double theta = std::numbers::pi;
      if (na > 0 && nb > 0) theta = std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
      acc += std::cos(std::numbers::pi - theta);
    }
    q += w.k2 / static_cast<double>(n - 2) * acc;
  }
  return q;
}

inline double credibility(double l_score, double q_score, const CredibilityWeights& w) {
  return w.kL * l_score + w.kQ * q_score;
}

struct RansacConfig {
  int iterations = 50;                 // Q sample groups per order
  double accept_s = 0.5;               // s*
  double min_pixel_consistency = 0.6;  // on normalized L
  double band_cells = 1.0;
  int likelihood_bins = 8;
  CredibilityWeights weights;
  MarkingColor color = MarkingColor::White;
  std::uint64_t seed = 1;
};

struct RansacResult {
  std::optional<UncertainDeformationTemplate> lane;
  std::array<int, 3> hypotheses{0, 0, 0};  // per order N = 2, 3, 4
  int orders_evaluated = 0;
};

namespace detail {

struct Scored {
  BezierCurve curve;  // spans its support
  double l_norm = 0.0, q = 0.0, s = 0.0;
  std::vector<std::size_t> support;
  std::vector<double> support_t;
};

class HypothesisScorer {
 public:
  HypothesisScorer(std::span<const SamplePoint> pts, const BirdEyeGrid& grid, double v_extent,
                   const RansacConfig& cfg)
      : pts_(pts), grid_(grid), v_(v_extent), cfg_(cfg), mask_(grid.cols(), grid.rows()) {
    for (const auto& p : pts_) total_ += p.val;
    for (const auto& p : pts_) {
      y_lo_ = std::min(y_lo_, p.y);
      y_hi_ = std::max(y_hi_, p.y);
    }
  }

  // Extends the polynomial over the sample space's forward span before testing support.
  std::optional<Scored> score(const BezierCurve& hyp) {
    double ta = 0.0, tb = 1.0;
    if (!extend(hyp, ta, tb)) return std::nullopt;
    const double len = polyline_length(hyp, ta, tb);
    if (len > 10.0 * (y_hi_ - y_lo_ + 1.0)) return std::nullopt;
    mask_.mark([&](double t) { return bezier_eval_any(hyp, t); }, ta, tb, grid_, cfg_.band_cells, len);

    Scored sc;
    double sum = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!mask_.contains(pts_[i].col, pts_[i].row)) continue;
      sc.support.push_back(i);
      sc.support_t.push_back(mask_.param(pts_[i].col, pts_[i].row));
      sum += pts_[i].val;
    }
    if (sc.support.size() < 2) return std::nullopt;
    const double l_raw = color_factor(cfg_.color) * sum;
    sc.l_norm = total_ > 0 ? l_raw / total_ : 0.0;
    sc.q = likelihood_of_support(sc.support);
    sc.s = credibility(sc.l_norm, sc.q, cfg_.weights);

    // trim to the supported parameter range
    const auto [mn, mx] = std::minmax_element(sc.support_t.begin(), sc.support_t.end());
    if (!(*mx - *mn > 1e-9)) return std::nullopt;
    sc.curve = reparameterize(hyp, *mn, *mx);
    for (double& t : sc.support_t) t = (t - *mn) / (*mx - *mn);
    return sc;
  }

 private:
  double likelihood_of_support(const std::vector<std::size_t>& support) const {
    // extremes plus per-bin centroids, ordered forward
    double lo = 1e300, hi = -1e300;
    std::size_t ilo = 0, ihi = 0;
    for (std::size_t i : support) {
      if (pts_[i].y < lo) { lo = pts_[i].y; ilo = i; }
      if (pts_[i].y > hi) { hi = pts_[i].y; ihi = i; }
    }
    const int bins = std::max(1, cfg_.likelihood_bins);
    std::vector<Point2> sum(bins, Point2::Zero());
    std::vector<int> count(bins, 0);
    const double span = std::max(hi - lo, 1e-9);
    for (std::size_t i : support) {
      const int b = std::min(bins - 1, static_cast<int>((pts_[i].y - lo) / span * bins));
      sum[b] += Point2(pts_[i].x, pts_[i].y);
      ++count[b];
    }
    std::vector<Point2> ordered;
    ordered.emplace_back(pts_[ilo].x, pts_[ilo].y);
    for (int b = 0; b < bins; ++b) {
      if (count[b] > 0) ordered.push_back(sum[b] / count[b]);
    }
    ordered.emplace_back(pts_[ihi].x, pts_[ihi].y);
    return curve_likelihood(ordered, v_, cfg_.weights);
  }

  bool extend(const BezierCurve& c, double& ta, double& tb) const {
    // widen [0, 1] until the curve leaves the forward span on both ends
    const double margin = grid_.resolution;
    auto inside = [&](double t) {
      const double y = bezier_eval_any(c, t).y();
      return y >= y_lo_ - margin && y <= y_hi_ + margin;
    };
    const double step = 0.02;
    ta = 0.0;
    tb = 1.0;
    for (int i = 0; i < 200 && inside(ta - step); ++i) ta -= step;
    for (int i = 0; i < 200 && inside(tb + step); ++i) tb += step;
    return std::isfinite(ta) && std::isfinite(tb);
  }

  static BezierCurve reparameterize(const BezierCurve& c, double t0, double t1) {
    // same polynomial, restricted to [t0, t1] and mapped onto [0, 1]
    const int n = c.degree();
    std::vector<Point2> pts(n + 1);
    std::vector<double> u(n + 1);
    for (int i = 0; i <= n; ++i) {
      u[i] = static_cast<double>(i) / n;
      pts[i] = bezier_eval_any(c, t0 + (t1 - t0) * u[i]);
    }
    return fit_control_points(pts, u, n).curve;
  }

  std::span<const SamplePoint> pts_;
  BirdEyeGrid grid_;
  double v_;
  const RansacConfig& cfg_;
  CurveMask mask_;
  double total_ = 0.0;
  double y_lo_ = 1e300, y_hi_ = -1e300;
};

}  // namespace detail

/// Orders N = 2..4 are tried in turn (line, parabola, cubic); the first order whose
/// best hypothesis passes both consistency tests is returned.
inline RansacResult ransac_fit(std::span<const SamplePoint> points, const BirdEyeGrid& grid,
                               double v_extent, const RansacConfig& cfg) {
  cfg.weights.validate();
  RansacResult result;
  if (points.size() < 2) return result;

  std::vector<SamplePoint> pts(points.begin(), points.end());
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
  detail::HypothesisScorer scorer(pts, grid, v_extent, cfg);
  std::mt19937_64 rng(cfg.seed);

  for (int order = 2; order <= 4; ++order) {
    const int degree = order - 1;
    if (pts.size() < static_cast<std::size_t>(order)) break;
    ++result.orders_evaluated;
    std::optional<detail::Scored> best;
    std::vector<Point2> group(order);
    std::vector<double> params;
    for (int q = 0; q < cfg.iterations; ++q) {
      ++result.hypotheses[order - 2];
      // one sample per forward stratum keeps the group spread along the marking
      for (int k = 0; k < order; ++k) {
        const std::size_t lo = pts.size() * k / order, hi = pts.size() * (k + 1) / order;
        std::uniform_int_distribution<std::size_t> pick(lo, std::max(lo, hi - 1));
        const auto& p = pts[pick(rng)];
        group[k] = Point2(p.x, p.y);
      }
      params = chord_length_params(group);
      std::optional<detail::Scored> sc;
      try {
        sc = scorer.score(fit_control_points(group, params, degree).curve);
      } catch (const Error&) {
        continue;
      }
      if (sc && (!best || sc->s > best->s)) best = std::move(sc);
    }
    if (!best) continue;

    // least-squares refit on the consensus set
    if (best->support.size() > static_cast<std::size_t>(order)) {
      std::vector<Point2> sup;
      sup.reserve(best->support.size());
      for (std::size_t i : best->support) sup.emplace_back(pts[i].x, pts[i].y);
      try {
        auto refit = scorer.score(fit_control_points(sup, best->support_t, degree).curve);
        if (refit && refit->s >= best->s) best = std::move(refit);
      } catch (const Error&) {
      }
    }

    if (best->l_norm >= cfg.min_pixel_consistency && best->s >= cfg.accept_s) {
      UncertainDeformationTemplate udt;
      udt.order = order;
      udt.curve = best->curve;
      udt.color = cfg.color;
      udt.s = best->s;
      udt.pixel_consistency = best->l_norm;
      udt.likelihood = best->q;
      udt.support = best->support.size();
      result.lane = std::move(udt);
      return result;
    }
  }
  return result;
}

inline RansacResult ransac_fit(const SampleSpace& omega, const RansacConfig& cfg) {
  return ransac_fit(omega.points, omega.grid, omega.roi.height() * omega.grid.resolution, cfg);
}

struct DetectConfig {
  BirdEyeGrid grid;
  double static_k = 0.9;
  double static_l = 0.5;
  double static_dy_frac = 0.1;  // vertical shift of the static ROI, fraction of frame height
  DynamicRoi roi;
  DynamicRoiUpdate roi_update;
  double speed = 0.0;           // m/s
  bool lane_change_signal = false;
  double lane_offset = 0.0;     // m
  double marking_width = 0.15;  // m
  double filter_theta = 0.0;
  ThresholdRule threshold;
  RansacConfig ransac;
  int max_lanes = 4;
  double yellow_chroma = 40.0;  // (r+g)/2 - b above which a marking reads as yellow
};

struct DetectionResult {
  std::vector<UncertainDeformationTemplate> lanes;
  std::size_t samples = 0;
  std::size_t clusters = 0;
  double elapsed_ms = 0.0;
};

/// Static ROI -> warp -> dynamic ROI crop -> filter -> sample space -> one RANSAC per
/// column cluster. Control points are ground meters in the vehicle frame.
inline DetectionResult detect_lanes(const GrayImage& frame, const CameraCalibration& calib,
                                    const DetectConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  require_frame(frame);
  calib.validate();
  DetectionResult out;

  const StaticRoi sroi = compute_static_roi(frame, cfg.static_k, cfg.static_l, calib.cu, calib.cv,
                                            0.0, cfg.static_dy_frac * frame.height());
  const BirdEyeImage bev = warp_to_birdeye(frame, calib, sroi, cfg.grid);
  const DynamicRoi droi = compute_dynamic_roi(cfg.speed, cfg.lane_change_signal, cfg.roi, cfg.roi_update);
  const CellRect rect = dynamic_roi_rect(droi, cfg.grid, cfg.lane_offset);
  if (rect.empty()) return out;

  FloatImage crop(rect.width(), rect.height());
  double valid_sum = 0.0;
  std::size_t valid_n = 0;
  for (int r = rect.row0; r < rect.row1; ++r)
    for (int c = rect.col0; c < rect.col1; ++c)
      if (bev.valid(c, r)) {
        valid_sum += bev.image(c, r);
        ++valid_n;
      }
  if (valid_n == 0) return out;
  const float fill = static_cast<float>(valid_sum / valid_n);
  for (int r = rect.row0; r < rect.row1; ++r)
    for (int c = rect.col0; c < rect.col1; ++c)
      crop(c - rect.col0, r - rect.row0) = bev.valid(c, r) ? bev.image(c, r) : fill;

  const double su = sigma_u_for_marking(cfg.marking_width / cfg.grid.resolution);
  const double sv = sigma_v_for_roi(rect.height());
  const int radius = static_cast<int>(std::ceil(3.0 * std::max(su, sv)));
  const FloatImage response = apply_kernel(crop, build_kernel(cfg.filter_theta, su, sv, radius));

  FloatImage filtered(cfg.grid.cols(), cfg.grid.rows());
  for (int r = rect.row0; r < rect.row1; ++r)
    for (int c = rect.col0; c < rect.col1; ++c)
      filtered(c, r) = bev.valid(c, r) ? response(c - rect.col0, r - rect.row0) : 0.0f;

  const SampleSpace omega = extract_sample_space(filtered, rect, cfg.grid, cfg.threshold);
  out.samples = omega.size();
  out.clusters = omega.clusters.size();
  const double v_extent = rect.height() * cfg.grid.resolution;

  std::vector<std::vector<SamplePoint>> by_cluster(omega.clusters.size());
  for (const auto& p : omega.points) by_cluster[p.cluster].push_back(p);
  for (std::size_t ci = 0; ci < by_cluster.size(); ++ci) {
    RansacConfig rc = cfg.ransac;
    rc.seed = cfg.ransac.seed + 7919u * ci;
    auto res = ransac_fit(by_cluster[ci], cfg.grid, v_extent, rc);
    if (res.lane) out.lanes.push_back(std::move(*res.lane));
  }
  std::stable_sort(out.lanes.begin(), out.lanes.end(),
                   [](const auto& a, const auto& b) { return a.s > b.s; });
  if (out.lanes.size() > static_cast<std::size_t>(cfg.max_lanes)) out.lanes.resize(cfg.max_lanes);
  std::stable_sort(out.lanes.begin(), out.lanes.end(), [](const auto& a, const auto& b) {
    return a.curve.control.front().x() < b.curve.control.front().x();
  });
  out.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

/// Marking color from the mean chroma of the frame along the projected curve.
inline MarkingColor classify_marking_color(const RgbImage& frame, const BezierCurve& curve,
                                           const CameraCalibration& calib, double yellow_chroma) {
  double acc = 0.0;
  int n = 0;
  for (const auto& p : sample_curve(curve, 64)) {
    try {
      const PixelCoord px = ground_to_pixel({p.x(), p.y()}, calib);
      const int u = static_cast<int>(std::lround(px.u)), v = static_cast<int>(std::lround(px.v));
      if (!frame.contains(u, v)) continue;
      const Rgb c = frame(u, v);
      acc += (c.r + c.g) / 2.0 - c.b;
      ++n;
    } catch (const Error&) {
    }
  }
  return (n > 0 && acc / n > yellow_chroma) ? MarkingColor::Yellow : MarkingColor::White;
}

/// Color input: detection on luminance, then per-template color classification and
/// re-weighting of the pixel-consistency term.
inline DetectionResult detect_lanes(const RgbImage& frame, const CameraCalibration& calib,
                                    const DetectConfig& cfg) {
  DetectionResult out = detect_lanes(to_luminance(frame), calib, cfg);
  for (auto& lane : out.lanes) {
    const MarkingColor c = classify_marking_color(frame, lane.curve, calib, cfg.yellow_chroma);
    if (c != lane.color) {
      const double l_raw = lane.pixel_consistency / color_factor(lane.color);
      lane.pixel_consistency = l_raw * color_factor(c);
      lane.s = credibility(lane.pixel_consistency, lane.likelihood, cfg.ransac.weights);
      lane.color = c;
    }
  }
  return out;
}

inline void write_templates_header(std::ostream& out) {
  out << "frame_id,order,x0,y0,x1,y1,x2,y2,x3,y3,color,s\n";
}

/// One row per lane; unused control-point columns are left empty.
inline void write_templates_csv(std::ostream& out, const std::string& frame_id,
                                std::span<const UncertainDeformationTemplate> lanes) {
  char buf[64];
  for (const auto& lane : lanes) {
    out << frame_id << ',' << lane.order;
    for (int i = 0; i < 4; ++i) {
      if (i < static_cast<int>(lane.curve.control.size())) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f", lane.curve.control[i].x(), lane.curve.control[i].y());
        out << buf;
      } else {
        out << ",,";
      }
    }
    std::snprintf(buf, sizeof buf, ",%s,%.6f\n", to_string(lane.color), lane.s);
    out << buf;
  }
}

}  // namespace coop
