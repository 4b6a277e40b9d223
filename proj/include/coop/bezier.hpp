#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "coop/error.hpp"

namespace coop {

using Point2 = Eigen::Vector2d;

/// Bezier curve of degree 1..3 in ground meters.
struct BezierCurve {
  std::vector<Point2> control;

  BezierCurve() = default;
  explicit BezierCurve(std::vector<Point2> pts) : control(std::move(pts)) { validate(); }

  int degree() const { return static_cast<int>(control.size()) - 1; }

  void validate() const {
    if (control.size() < 2 || control.size() > 4) {
      throw Error(ErrorCode::DomainError, "Bezier degree must be 1, 2 or 3");
    }
  }
};

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Bernstein-basis evaluation.
inline Point2 bezier_eval(const BezierCurve& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::DomainError, "Bezier parameter outside [0, 1]");
  const int n = curve.degree();
  Point2 p = Point2::Zero();
  for (int i = 0; i <= n; ++i) {
    p += curve.control[i] * (binomial(n, i) * std::pow(1.0 - t, n - i) * std::pow(t, i));
  }
  return p;
}

inline Point2 bezier_derivative(const BezierCurve& curve, double t) {
  const int n = curve.degree();
  Point2 d = Point2::Zero();
  for (int i = 0; i < n; ++i) {
    const Point2 delta = (curve.control[i + 1] - curve.control[i]) * static_cast<double>(n);
    d += delta * (binomial(n - 1, i) * std::pow(1.0 - t, n - 1 - i) * std::pow(t, i));
  }
  return d;
}

/// Basis matrix M such that P(t) = [t^n ... t 1] * M * [P_0 ... P_n]^T.
inline Eigen::MatrixXd bezier_basis_matrix(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    for (int power = i; power <= n; ++power) {
      const double sign = ((power - i) % 2 == 0) ? 1.0 : -1.0;
      m(n - power, i) = binomial(n, i) * binomial(n - i, power - i) * sign;
    }
  }
  return m;
}

/// Chord-length parameters normalized to [0, 1].
inline std::vector<double> chord_length_params(std::span<const Point2> pts) {
  std::vector<double> t(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) t[i] = t[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = t.empty() ? 0.0 : t.back();
  if (total > 0) {
    for (double& v : t) v /= total;
  }
  return t;
}

struct BezierFit {
  BezierCurve curve;
  double residual_rms = 0.0;  // m
};

/// Solves Q = T M P: exactly for n+1 samples, by normal equations beyond that.
inline BezierFit fit_control_points(std::span<const Point2> pts, std::span<const double> params,
                                    int degree) {
  if (degree < 1 || degree > 3) throw Error(ErrorCode::DomainError, "Bezier degree must be 1, 2 or 3");
  if (pts.size() != params.size()) throw Error(ErrorCode::DomainError, "one parameter per sample");
  const int k = static_cast<int>(pts.size());
  if (k < degree + 1) throw Error(ErrorCode::DegenerateParameterization, "too few samples for degree");

  std::vector<double> sorted(params.begin(), params.end());
  std::sort(sorted.begin(), sorted.end());
  int distinct = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] > 1e-12) ++distinct;
  }
  if (distinct < degree + 1) {
    throw Error(ErrorCode::DegenerateParameterization, "repeated sample parameters");
  }

  Eigen::MatrixXd tm(k, degree + 1);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c <= degree; ++c) tm(r, c) = std::pow(params[r], degree - c);
  }
  const Eigen::MatrixXd a = tm * bezier_basis_matrix(degree);
  Eigen::MatrixXd q(k, 2);
  for (int r = 0; r < k; ++r) q.row(r) = pts[r].transpose();

  Eigen::MatrixXd p;
  if (k == degree + 1) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateParameterization, "singular T matrix");
    p = lu.solve(q);
  } else {
    const Eigen::MatrixXd normal = a.transpose() * a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateParameterization, "singular normal matrix");
    p = lu.solve(a.transpose() * q);
  }

  std::vector<Point2> control(degree + 1);
  for (int i = 0; i <= degree; ++i) control[i] = p.row(i).transpose();
  BezierFit fit{BezierCurve(std::move(control)), 0.0};
  const Eigen::MatrixXd resid = a * p - q;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / k);
  return fit;
}

inline BezierFit fit_control_points(std::span<const Point2> pts, int degree) {
  const auto t = chord_length_params(pts);
  return fit_control_points(pts, t, degree);
}

/// Dense polyline of the curve.
inline std::vector<Point2> sample_curve(const BezierCurve& curve, int segments) {
  std::vector<Point2> out(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) out[i] = bezier_eval(curve, static_cast<double>(i) / segments);
  return out;
}

/// Lateral position of the curve at forward distance y, for curves that are
/// monotone in y. Empty outside the curve's forward span.
inline std::optional<double> lateral_at(const BezierCurve& curve, double y, int segments = 256) {
  const auto poly = sample_curve(curve, segments);
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const double y0 = poly[i - 1].y(), y1 = poly[i].y();
    if ((y >= y0 && y <= y1) || (y >= y1 && y <= y0)) {
      if (y1 == y0) return poly[i].x();
      const double f = (y - y0) / (y1 - y0);
      return poly[i - 1].x() + f * (poly[i].x() - poly[i - 1].x());
    }
  }
  return std::nullopt;
}

/// RMS lateral deviation between two curves over the forward span they share.
/// Empty when the shared span is shorter than `min_span`.
inline std::optional<double> lateral_rms(const BezierCurve& a, const BezierCurve& b, double y_lo,
                                         double y_hi, double min_span = 5.0, double step = 0.25) {
  const auto span_of = [](const BezierCurve& c) {
    double lo = 1e300, hi = -1e300;
    for (const auto& p : sample_curve(c, 64)) {
      lo = std::min(lo, p.y());
      hi = std::max(hi, p.y());
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = span_of(a);
  const auto [blo, bhi] = span_of(b);
  const double lo = std::max({y_lo, alo, blo}), hi = std::min({y_hi, ahi, bhi});
  if (hi - lo < min_span) return std::nullopt;
  double acc = 0.0;
  int n = 0;
  for (double y = lo; y <= hi; y += step) {
    const auto xa = lateral_at(a, y), xb = lateral_at(b, y);
    if (!xa || !xb) continue;
    acc += (*xa - *xb) * (*xa - *xb);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return std::sqrt(acc / n);
}

}  // namespace coop
