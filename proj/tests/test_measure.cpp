#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace adpnet;

TEST(MeasureCsv, UniformWeightsFromThirdColumn) {
  std::istringstream in("0,0,1\n1,0,1\n");
  const auto m = parse_measure_csv(in);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.dim(), 2);
  EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.5);
}

TEST(MeasureCsv, Renormalizes) {
  std::istringstream in("0,0,3\n1,0,1\n");
  const auto m = parse_measure_csv(in);
  EXPECT_DOUBLE_EQ(m.weight(0), 0.75);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.25);
}

TEST(MeasureCsv, MalformedRowReportsLine) {
  std::istringstream in("0,abc\n");
  try {
    parse_measure_csv(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line, 1u);
  }
}

TEST(MeasureCsv, HeaderAndExplicitDim) {
  std::istringstream a("x,y,w\n0,0,1\n2,0,3\n");
  const auto m = parse_measure_csv(a);
  EXPECT_EQ(m.dim(), 2);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.75);
  std::istringstream b("0,0,1\n1,1,1\n");
  EXPECT_EQ(parse_measure_csv(b, 3).dim(), 3);
  std::istringstream c("0,0\n1,1,1\n");
  EXPECT_THROW(parse_measure_csv(c), ParseError);
}

TEST(MeasureCsv, RejectsBadWeights) {
  std::istringstream neg("0,0,-1\n1,0,1\n");
  EXPECT_THROW(parse_measure_csv(neg), ValidationError);
  std::istringstream zero("0,0,0\n1,0,0\n");
  EXPECT_THROW(parse_measure_csv(zero), ValidationError);
}

TEST(MeasureJson, RoundTrip) {
  const auto m = sample_density(GaussianMixture{{{0, 0}, {2, 1}}, {0.3, 0.5}, {}}, 50, 3);
  const auto back = measure_from_json(measure_to_json(m));
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.weight(i), m.weight(i));
    EXPECT_DOUBLE_EQ(back.point(i)[1], m.point(i)[1]);
  }
}

TEST(SampleDensity, UniformBoxWeights) {
  const auto m = sample_density(UniformBox{{0, 0}, {1, 1}}, 4, 7);
  ASSERT_EQ(m.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(m.weight(i), 0.25);
    for (double c : m.point(i)) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
  }
}

TEST(SampleDensity, MixtureNormalizedAndDeterministic) {
  const GaussianMixture g{{{0, 0}, {3, 1}}, {0.5, 1.0}, {0.3, 0.7}};
  const auto a = sample_density(g, 1000, 5), b = sample_density(g, 1000, 5);
  double total = 0.0;
  for (double w : a.weights()) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(a.coords(), b.coords());
  EXPECT_NE(a.coords(), sample_density(g, 1000, 6).coords());
}

TEST(SampleDensity, DiskAndSegmentSupport) {
  const auto disk = sample_density(UniformDisk{{1, 1}, 0.5}, 500, 1);
  for (std::size_t i = 0; i < disk.size(); ++i) EXPECT_LE(dist(disk.point(i), Vec{1, 1}), 0.5 + 1e-12);
  const auto seg = sample_density(SegmentDensity{{0, 0}, {1, 0}}, 100, 1);
  for (std::size_t i = 0; i < seg.size(); ++i) EXPECT_EQ(seg.point(i)[1], 0.0);
}

TEST(Hull, TriangleDiameter) {
  const auto h = hull_summary(testutil::points(2, {0, 0, 1, 0, 0, 1}));
  EXPECT_NEAR(h.diameter, std::sqrt(2.0), 1e-12);
  EXPECT_EQ(h.vertices.size(), 3u);
}

TEST(Hull, SinglePoint) {
  const auto h = hull_summary(testutil::points(2, {0.3, 0.4}));
  EXPECT_EQ(h.diameter, 0.0);
  EXPECT_TRUE(h.contains(Vec{0.3, 0.4}, 1e-12));
  EXPECT_FALSE(h.contains(Vec{0.3, 0.5}, 1e-12));
}

// Every input point satisfies every facet, and every facet is tight on some
// input point.
TEST(Hull, HalfSpacesContainCloud) {
  for (int d : {2, 3}) {
    const auto m = sample_density(GaussianMixture{{Vec(static_cast<std::size_t>(d), 0.0)}, {1.0}, {}}, 400, 9);
    const auto h = hull_summary(m);
    ASSERT_FALSE(h.halfspaces.empty());
    for (const auto &hs : h.halfspaces) {
      double tight = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double s = dot(hs.normal, m.point(i)) - hs.offset;
        EXPECT_LE(s, 1e-9);
        tight = std::max(tight, s);
      }
      EXPECT_NEAR(tight, 0.0, 1e-9);
    }
    double brute = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j) brute = std::max(brute, dist(m.point(i), m.point(j)));
    EXPECT_NEAR(h.diameter, brute, 1e-12);
  }
}

TEST(Measure, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(DiscreteMeasure(2, {}, {}), ValidationError);
  EXPECT_THROW(DiscreteMeasure(2, {0, NAN}, {}), ValidationError);
  EXPECT_THROW(DiscreteMeasure(2, {0, 0, 1}, {}), ValidationError);
}
