#include <gtest/gtest.h>

#include <random>

#include "coop/lane_udt.hpp"
#include "coop/synth_scene.hpp"

using namespace coop;

namespace {

// Sample points covering every cell within `half_cells` of the curve, weight `val`.
std::vector<SamplePoint> band_samples(const BezierCurve& c, const BirdEyeGrid& g, double half_cells,
                                      double val = 1.0) {
  std::vector<SamplePoint> out;
  for (int r = 0; r < g.rows(); ++r) {
    const auto x = lateral_at(c, g.y_of(r));
    if (!x) continue;
    const double fc = g.col_of(*x);
    for (int col = static_cast<int>(std::floor(fc - half_cells)); col <= static_cast<int>(std::ceil(fc + half_cells));
         ++col) {
      if (col < 0 || col >= g.cols() || std::abs(col - fc) > half_cells) continue;
      out.push_back({col, r, g.x_of(col), g.y_of(r), val, 0});
    }
  }
  return out;
}

double span_m(const BirdEyeGrid& g) { return g.y_max - g.y_min; }

}  // namespace

TEST(PixelConsistency, EmptySamplesScoreZero) {
  const BirdEyeGrid g;
  const BezierCurve c({Point2(0, 6), Point2(0, 36)});
  EXPECT_EQ(pixel_consistency(c, std::span<const SamplePoint>(), g, 1.0), 0.0);
  SampleSpace omega;
  omega.grid = g;
  EXPECT_EQ(pixel_consistency(c, omega, 1.0), 0.0);
}

TEST(PixelConsistency, DirectSummation) {
  const BirdEyeGrid g;
  const BezierCurve c({Point2(g.x_of(100), 6), Point2(g.x_of(100), 36)});
  std::vector<SamplePoint> s;
  for (int i = 0; i < 10; ++i) {
    const int row = 50 + 40 * i;
    s.push_back({100, row, g.x_of(100), g.y_of(row), 2.0, 0});
  }
  // off-curve pixels contribute nothing
  s.push_back({130, 60, g.x_of(130), g.y_of(60), 5.0, 0});
  s.push_back({20, 300, g.x_of(20), g.y_of(300), 5.0, 0});
  EXPECT_NEAR(pixel_consistency(c, s, g, color_factor(MarkingColor::White)), 20.0, 1e-12);
}

TEST(PixelConsistency, YellowCompensationFactor) {
  const BirdEyeGrid g;
  const BezierCurve c({Point2(0.3, 6), Point2(0.5, 20), Point2(0.2, 36)});
  const auto s = band_samples(c, g, 1.0, 0.7);
  const double white = pixel_consistency(c, s, g, color_factor(MarkingColor::White));
  const double yellow = pixel_consistency(c, s, g, color_factor(MarkingColor::Yellow));
  EXPECT_GT(white, 0.0);
  EXPECT_NEAR(yellow, 1.5 * white, 1e-9);
}

TEST(CurveLikelihood, CollinearFullHeight) {
  CredibilityWeights w;
  std::vector<Point2> s;
  for (int i = 0; i <= 10; ++i) s.emplace_back(0.0, 3.0 * i);
  EXPECT_NEAR(curve_likelihood(s, 30.0, w), 1.0, 1e-12);
}

TEST(CurveLikelihood, TwoSamplesHaveNoAngleTerm) {
  CredibilityWeights w;
  const std::vector<Point2> s{Point2(0, 0), Point2(3, 4)};
  EXPECT_NEAR(curve_likelihood(s, 10.0, w), w.k1 * 5.0 / 10.0, 1e-12);
}

TEST(CurveLikelihood, RightAngleZigZag) {
  CredibilityWeights w;
  w.k1 = 0.0;
  const std::vector<Point2> s{Point2(0, 0), Point2(1, 1), Point2(0, 2), Point2(1, 3)};
  EXPECT_NEAR(curve_likelihood(s, 10.0, w), 0.0, 1e-12);
}

TEST(Credibility, LinearCombination) {
  CredibilityWeights w;
  EXPECT_EQ(credibility(0, 0, w), 0.0);
  w.kL = 0;
  EXPECT_DOUBLE_EQ(credibility(7.0, 0.8, w), w.kQ * 0.8);
  w.kL = 1.0;
  w.kQ = 0.5;
  EXPECT_DOUBLE_EQ(credibility(2.0, 0.4, w), 2.2);
}

TEST(Credibility, ScoresMayExceedOne) {
  // full-length straight low-curvature hypothesis with strong pixel support
  CredibilityWeights w;
  std::vector<Point2> s;
  for (int i = 0; i <= 10; ++i) s.emplace_back(0.0, 3.0 * i);
  const double q = curve_likelihood(s, 30.0, w);
  const double score = credibility(7.0, q, w);
  EXPECT_NEAR(score, 1.14, 1e-12);
  EXPECT_GT(score, 1.0);
}

TEST(Credibility, WeightValidation) {
  CredibilityWeights w;
  w.k1 = -1;
  EXPECT_THROW(w.validate(), Error);
  w = {};
  w.kL = 0;
  w.kQ = 0;
  EXPECT_THROW(w.validate(), Error);
}

TEST(Ransac, NoSamplesNoLane) {
  const BirdEyeGrid g;
  const auto r = ransac_fit(std::span<const SamplePoint>(), g, span_m(g), RansacConfig{});
  EXPECT_FALSE(r.lane.has_value());
  SampleSpace omega;
  omega.grid = g;
  EXPECT_FALSE(ransac_fit(omega, RansacConfig{}).lane.has_value());
}

TEST(Ransac, StraightMarkingSelectsOrderTwo) {
  const BirdEyeGrid g;
  const BezierCurve truth({Point2(1.7, 6), Point2(1.9, 36)});
  const auto s = band_samples(truth, g, 1.0);
  int order2 = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RansacConfig cfg;
    cfg.seed = seed;
    const auto r = ransac_fit(s, g, span_m(g), cfg);
    ASSERT_TRUE(r.lane.has_value());
    order2 += r.lane->order == 2 ? 1 : 0;
    EXPECT_GE(r.lane->s, cfg.accept_s);
    EXPECT_GE(r.lane->pixel_consistency, cfg.min_pixel_consistency);
    EXPECT_LT(*lateral_rms(r.lane->curve, truth, 6, 36), 0.05);
  }
  EXPECT_GE(order2, 38);
}

TEST(Ransac, SShapedMarkingEscalatesOrder) {
  const BirdEyeGrid g;
  const BezierCurve truth({Point2(0.0, 6), Point2(2.0, 16), Point2(-2.0, 26), Point2(0.0, 36)});
  const auto s = band_samples(truth, g, 1.0);
  RansacConfig cfg;
  cfg.seed = 3;
  const auto r = ransac_fit(s, g, span_m(g), cfg);
  ASSERT_TRUE(r.lane.has_value());
  EXPECT_GT(r.lane->order, 2);
  EXPECT_GT(r.orders_evaluated, 1);
  EXPECT_GT(r.hypotheses[0], 0);
}

TEST(Ransac, NeverReturnsBelowAcceptance) {
  std::mt19937_64 rng(12);
  const BirdEyeGrid g;
  std::uniform_int_distribution<int> col(0, g.cols() - 1), row(0, g.rows() - 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SamplePoint> s;
    for (int i = 0; i < 400; ++i) {
      const int c = col(rng), r = row(rng);
      s.push_back({c, r, g.x_of(c), g.y_of(r), 1.0, 0});
    }
    RansacConfig cfg;
    cfg.seed = trial + 1;
    cfg.accept_s = 0.6;
    const auto res = ransac_fit(s, g, span_m(g), cfg);
    if (res.lane) {
      EXPECT_GE(res.lane->s, cfg.accept_s);
      EXPECT_GE(res.lane->pixel_consistency, cfg.min_pixel_consistency);
    }
  }
}

TEST(Ransac, DeterministicPerSeed) {
  const BirdEyeGrid g;
  const auto s = band_samples(BezierCurve({Point2(-1.0, 6), Point2(-0.6, 20), Point2(-1.4, 36)}), g, 1.0);
  RansacConfig cfg;
  cfg.seed = 99;
  const auto a = ransac_fit(s, g, span_m(g), cfg), b = ransac_fit(s, g, span_m(g), cfg);
  ASSERT_TRUE(a.lane && b.lane);
  EXPECT_EQ(a.lane->order, b.lane->order);
  for (std::size_t i = 0; i < a.lane->curve.control.size(); ++i) {
    EXPECT_EQ(a.lane->curve.control[i], b.lane->curve.control[i]);
  }
}

TEST(DetectLanes, TwoLaneStraightRoad) {
  SceneSpec spec;
  spec.markings = lane_markings(1, 1, 3.5, 0.1, 0.0, 0.0);
  spec.noise.gaussian_sigma = 4.0;
  const auto fr = render_frame(spec);
  const auto res = detect_lanes(fr.image, spec.calib, DetectConfig{});
  ASSERT_EQ(res.lanes.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto rms = lateral_rms(res.lanes[i].curve, fr.truth.markings[i].curve, 6, 36);
    ASSERT_TRUE(rms.has_value());
    EXPECT_LT(*rms, 0.1);
    EXPECT_GE(res.lanes[i].order, 2);
    EXPECT_LE(res.lanes[i].order, 4);
    EXPECT_GE(res.lanes[i].s, 0.0);
  }
  EXPECT_LT(res.lanes[0].curve.control.front().x(), res.lanes[1].curve.control.front().x());
}

TEST(DetectLanes, CurvedRoad) {
  SceneSpec spec;
  spec.markings = lane_markings(1, 1, 3.5, -0.2, 0.005, 500.0);
  spec.noise.gaussian_sigma = 6.0;
  const auto fr = render_frame(spec);
  const auto res = detect_lanes(fr.image, spec.calib, DetectConfig{});
  // the far end of a curving marking can leave its near column cluster and yield
  // a second, disjoint template; every marking must still be matched
  ASSERT_GE(res.lanes.size(), 2u);
  EXPECT_LE(res.lanes.size(), 4u);
  for (const auto& m : fr.truth.markings) {
    double best = 1e9;
    for (const auto& l : res.lanes) {
      if (const auto rms = lateral_rms(l.curve, m.curve, 6, 36)) best = std::min(best, *rms);
    }
    EXPECT_LT(best, 0.3);
  }
}

TEST(DetectLanes, NoiseOnlyFrameIsEmpty) {
  SceneSpec spec;
  spec.noise.gaussian_sigma = 12.0;
  const auto fr = render_frame(spec);
  EXPECT_TRUE(fr.truth.markings.empty());
  const auto res = detect_lanes(fr.image, spec.calib, DetectConfig{});
  EXPECT_TRUE(res.lanes.empty());
}

TEST(DetectLanes, UniformFrameIsEmpty) {
  const GrayImage img(640, 480, 90);
  EXPECT_TRUE(detect_lanes(img, CameraCalibration{}, DetectConfig{}).lanes.empty());
}

TEST(DetectLanes, InvalidInputsPropagate) {
  CameraCalibration bad;
  bad.h = -1;
  EXPECT_THROW(detect_lanes(GrayImage(640, 480, 90), bad, DetectConfig{}), Error);
  EXPECT_THROW(detect_lanes(GrayImage(8, 8, 90), CameraCalibration{}, DetectConfig{}), Error);
}

TEST(MarkingColorTest, YellowMarkingClassified) {
  SceneSpec spec;
  spec.markings = lane_markings(1, 1, 3.5, 0.0, 0.0, 0.0);
  const auto fr = render_frame(spec);
  RgbImage rgb(fr.image.width(), fr.image.height());
  // tint the bright pixels on the left marking yellow
  for (int v = 0; v < rgb.height(); ++v)
    for (int u = 0; u < rgb.width(); ++u) {
      const std::uint8_t y = fr.image(u, v);
      rgb(u, v) = {y, y, y};
      if (y > 150 && u < 320 && v > 260) rgb(u, v) = {y, y, static_cast<std::uint8_t>(y / 3)};
    }
  const auto res = detect_lanes(rgb, spec.calib, DetectConfig{});
  ASSERT_EQ(res.lanes.size(), 2u);
  EXPECT_EQ(res.lanes[0].color, MarkingColor::Yellow);
  EXPECT_EQ(res.lanes[1].color, MarkingColor::White);
}
