#include <gtest/gtest.h>

#include <sstream>

#include "coop/lane_udt.hpp"
#include "coop/synth_scene.hpp"

using namespace coop;

namespace {

bool all_matched(const GroundTruth& truth, const std::vector<UncertainDeformationTemplate>& lanes) {
  for (const auto& m : truth.markings) {
    if (!m.in_view) continue;
    bool hit = false;
    for (const auto& l : lanes) {
      const auto rms = lateral_rms(l.curve, m.curve, 6, 36);
      if (rms && *rms <= 0.3) hit = true;
    }
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST(RenderFrame, DeterministicForSeed) {
  CorpusSpec corpus;
  const auto spec = corpus_scene(corpus, 3);
  const auto a = render_frame(spec), b = render_frame(spec);
  EXPECT_TRUE(std::equal(a.image.pixels().begin(), a.image.pixels().end(), b.image.pixels().begin()));
  auto other = spec;
  other.seed += 1;
  const auto c = render_frame(other);
  EXPECT_FALSE(std::equal(a.image.pixels().begin(), a.image.pixels().end(), c.image.pixels().begin()));
}

TEST(RenderFrame, TruthProjectsOntoBrightPixels) {
  SceneSpec spec;
  spec.markings = lane_markings(1, 1, 3.5, 0.2, 0.005, 600.0);
  const auto fr = render_frame(spec);
  ASSERT_EQ(fr.truth.markings.size(), 2u);
  const double mid = 0.5 * (spec.road_luminance + spec.marking_luminance);
  int total = 0, bright = 0;
  for (const auto& m : fr.truth.markings) {
    EXPECT_TRUE(m.in_view);
    for (int i = 0; i <= 200; ++i) {
      const double y = 6.0 + 20.0 * i / 200;
      const auto x = lateral_at(m.curve, y);
      ASSERT_TRUE(x.has_value());
      const auto p = ground_to_pixel({*x, y}, spec.calib);
      const int u = static_cast<int>(std::floor(p.u)), v = static_cast<int>(std::floor(p.v));
      if (u < 0 || u >= spec.width || v < 0 || v >= spec.height) continue;
      ++total;
      bright += fr.image(u, v) > mid ? 1 : 0;
    }
  }
  ASSERT_GT(total, 300);
  EXPECT_GE(bright, 0.95 * total);
}

TEST(RenderFrame, BlankSceneHasNoLanes) {
  SceneSpec spec;
  const auto fr = render_frame(spec);
  EXPECT_TRUE(fr.truth.markings.empty());
  // below the horizon every pixel is road
  const int v0 = static_cast<int>(std::ceil(horizon_row(spec.calib))) + 2;
  for (int v = v0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) ASSERT_EQ(fr.image(u, v), 90);
  EXPECT_TRUE(detect_lanes(fr.image, spec.calib, DetectConfig{}).lanes.empty());
}

TEST(RenderFrame, OutOfViewMarkingFlagged) {
  SceneSpec spec;
  MarkingSpec far;
  far.curve = BezierCurve({Point2(40, 0), Point2(40, 60)});
  spec.markings = lane_markings(1, 1, 3.5, 0, 0, 0);
  spec.markings.push_back(far);
  const auto fr = render_frame(spec);
  ASSERT_EQ(fr.truth.markings.size(), 3u);
  EXPECT_TRUE(fr.truth.markings[0].in_view);
  EXPECT_TRUE(fr.truth.markings[1].in_view);
  EXPECT_FALSE(fr.truth.markings[2].in_view);
}

TEST(RenderFrame, InvalidSpecRejected) {
  SceneSpec spec;
  spec.width = 8;
  EXPECT_THROW(render_frame(spec), Error);
  spec = {};
  spec.noise.gap_fraction = 1.0;
  EXPECT_THROW(render_frame(spec), Error);
  spec = {};
  spec.calib.fu = 0;
  EXPECT_THROW(render_frame(spec), Error);
}

TEST(RenderFrame, ThirtyPercentGapsStillDetected) {
  int ok = 0;
  const int frames = 40;
  for (int i = 0; i < frames; ++i) {
    SceneSpec spec;
    spec.seed = 100 + i;
    spec.markings = lane_markings(1, 1, 3.5, 0.1 * (i % 5) - 0.2, 0.0, i % 2 ? 800.0 : 0.0);
    spec.noise.gap_fraction = 0.3;
    spec.noise.gaussian_sigma = 5.0;
    const auto fr = render_frame(spec);
    DetectConfig cfg;
    cfg.ransac.seed = static_cast<std::uint64_t>(i + 1);
    ok += all_matched(fr.truth, detect_lanes(fr.image, spec.calib, cfg).lanes) ? 1 : 0;
  }
  EXPECT_GE(ok, 0.9 * frames);
}

TEST(Corpus, ScenesVaryAndRespectRanges) {
  CorpusSpec corpus;
  const auto a = corpus_scene(corpus, 0), b = corpus_scene(corpus, 1);
  EXPECT_NE(a.seed, b.seed);
  for (int i = 0; i < 50; ++i) {
    const auto s = corpus_scene(corpus, i);
    EXPECT_GE(s.noise.gaussian_sigma, corpus.sigma_min);
    EXPECT_LE(s.noise.gaussian_sigma, corpus.sigma_max);
    EXPECT_LE(s.noise.shadow_bands, corpus.shadow_bands_max);
    EXPECT_LE(s.noise.gap_fraction, corpus.gap_fraction_max);
    EXPECT_EQ(s.markings.size(), 2u);
  }
  EXPECT_EQ(corpus_scene(corpus, 7).seed, corpus_scene(corpus, 7).seed);
}

TEST(LaneMarkings, GeometryOfStraightAndCurved) {
  const auto straight = lane_markings(1, 2, 3.6, 0.3, 0.0, 0.0);
  ASSERT_EQ(straight.size(), 3u);
  EXPECT_NEAR(straight[0].curve.control[0].x(), -1.8 - 0.3, 1e-12);
  EXPECT_NEAR(straight[1].curve.control[0].x(), 1.8 - 0.3, 1e-12);
  EXPECT_NEAR(straight[2].curve.control[0].x(), 5.4 - 0.3, 1e-12);
  const auto curved = lane_markings(1, 1, 3.5, 0.0, 0.0, 500.0);
  // parabola x = a + y^2 / (2R)
  EXPECT_NEAR(*lateral_at(curved[1].curve, 30.0), 1.75 + 900.0 / 1000.0, 1e-9);
}

TEST(TruthCsv, RoundTrip) {
  GroundTruth t;
  t.markings.push_back({BezierCurve({Point2(-1.75, 0), Point2(-1.7, 60)}), MarkingColor::White, true});
  t.markings.push_back(
      {BezierCurve({Point2(1.75, 0), Point2(1.8, 30), Point2(2.5, 60)}), MarkingColor::Yellow, false});
  std::stringstream ss;
  write_truth_csv(ss, t);
  const auto back = read_truth_csv(ss);
  ASSERT_EQ(back.markings.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.markings[i].color, t.markings[i].color);
    EXPECT_EQ(back.markings[i].in_view, t.markings[i].in_view);
    ASSERT_EQ(back.markings[i].curve.control.size(), t.markings[i].curve.control.size());
    for (std::size_t k = 0; k < t.markings[i].curve.control.size(); ++k)
      EXPECT_LT((back.markings[i].curve.control[k] - t.markings[i].curve.control[k]).norm(), 1e-8);
  }
}

TEST(TruthCsv, MalformedRowsRejected) {
  std::stringstream empty;
  EXPECT_THROW(read_truth_csv(empty), Error);
  std::stringstream bad("id,order,color,in_view,x0,y0,x1,y1,x2,y2,x3,y3\n0,7,white,1,0,0,1,1,,,,\n");
  EXPECT_THROW(read_truth_csv(bad), Error);
  std::stringstream junk("header\n0,2,white,1,abc,0,1,1\n");
  EXPECT_THROW(read_truth_csv(junk), Error);
  EXPECT_THROW(read_truth_csv(std::string("/nonexistent/truth.csv")), Error);
}
