#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace adpnet;

namespace {

struct Setup {
  DiscreteMeasure mu;
  Network net;
  SampledNetwork s;
  ProjectionTable tab;
  PushforwardMeasure pf;
  BarycentreField field;
};

Setup make(double p, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed + 1000);
  Setup st{sample_density(UniformBox{{0, 0}, {1, 1}}, 400, seed), testutil::random_tree(rng, 2, 5), {}, {}, {}, {}};
  st.s = subdivide(st.net, 0.02);
  st.tab = project(st.mu, st.net);
  st.pf = pushforward(st.tab, st.s, st.mu);
  st.field = barycentre_field(st.mu, st.tab, st.pf, st.s, p);
  return st;
}

}  // namespace

TEST(Jp, SingleDistance) {
  const auto mu = testutil::points(2, {1, 0});
  const auto net = Network::point(Vec{0, 0});
  EXPECT_DOUBLE_EQ(j_p(mu, project(mu, net), 2.0), 1.0);
}

TEST(Jp, SupportOnNetwork) {
  const auto mu = sample_density(SegmentDensity{{0, 0}, {1, 0}}, 100, 2);
  const auto net = testutil::segment({0, 0}, {1, 0});
  EXPECT_EQ(j_p(mu, project(mu, net), 3.0), 0.0);
}

TEST(Jp, MatchesDirectSum) {
  const auto st = make(2.0);
  for (double p : {1.0, 2.0, 2.7, 4.0}) {
    double direct = 0.0;
    for (std::size_t i = 0; i < st.mu.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto &[a, b] : st.net.edges()) {
        double foot[2];
        best = std::min(best, detail::closest_on_segment(st.mu.point(i), st.net.vertex(static_cast<std::size_t>(a)),
                                                         st.net.vertex(static_cast<std::size_t>(b)), foot)
                                  .distance);
      }
      direct += st.mu.weight(i) * std::pow(best, p);
    }
    EXPECT_NEAR(j_p(st.mu, st.tab, p), direct, 1e-12);
  }
}

TEST(JSoft, PenaltyTerms) {
  const auto st = make(2.0);
  EXPECT_THROW(j_soft(st.mu, st.tab, st.net, 2.0, 0.0), ValidationError);
  EXPECT_NEAR(j_soft(st.mu, st.tab, st.net, 2.0, 0.3), j_p(st.mu, st.tab, 2.0) + 0.3 * total_length(st.net), 1e-15);
  const auto pt = Network::point(Vec{0.5, 0.5});
  EXPECT_EQ(j_soft(st.mu, project(st.mu, pt), pt, 2.0, 0.3), j_p(st.mu, project(st.mu, pt), 2.0));
}

TEST(Barycentre, SymmetricFiberCancels) {
  const auto mu = testutil::points(2, {0, 1, 0, -1});
  const auto net = Network::point(Vec{0, 0});
  const auto s = subdivide(net, 1.0);
  const auto tab = project(mu, net);
  const auto f = barycentre_field(mu, tab, pushforward(tab, s, mu), s, 2.0);
  EXPECT_EQ(f.norm_at(0), 0.0);
}

TEST(Barycentre, SinglePoint) {
  const auto mu = testutil::points(2, {0.3, 0.4});
  const auto net = Network::point(Vec{0, 0});
  const auto s = subdivide(net, 1.0);
  const auto tab = project(mu, net);
  const auto pf = pushforward(tab, s, mu);
  const auto f2 = barycentre_field(mu, tab, pf, s, 2.0);
  EXPECT_DOUBLE_EQ(f2.at(0)[0], 0.6);
  EXPECT_DOUBLE_EQ(f2.at(0)[1], 0.8);
  const auto f1 = barycentre_field(mu, tab, pf, s, 1.0);
  EXPECT_NEAR(f1.norm_at(0), 1.0, 1e-12);
}

TEST(Barycentre, NormBound) {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto st = make(p, 3);
    const double M = hull_summary(st.mu).diameter;
    for (std::size_t k = 0; k < st.field.size(); ++k) EXPECT_LE(st.field.norm_at(k), p * std::pow(M, p - 1.0) + 1e-12);
  }
}

TEST(Barycentre, SingularWhenPointOnNetwork) {
  const auto mu = testutil::points(2, {0.5, 0.0, 0.5, 1.0});
  const auto net = testutil::segment({0, 0}, {1, 0});
  const auto s = subdivide(net, 0.1);
  const auto tab = project(mu, net);
  EXPECT_THROW(barycentre_field(mu, tab, pushforward(tab, s, mu), s, 1.5), SingularIntegrandError);
  EXPECT_NO_THROW(barycentre_field(mu, tab, pushforward(tab, s, mu), s, 2.0));
}

TEST(NetField, MeanIdentityForPEqualTwo) {
  const auto st = make(2.0, 5);
  Vec expect = st.mu.mean();
  for (std::size_t k = 0; k < st.s.size(); ++k)
    for (std::size_t c = 0; c < 2; ++c) expect[c] -= st.pf.node_mass[k] * st.s.position(k)[c];
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(st.field.net[c], 2.0 * expect[c], 1e-12);

  const auto pt = Network::point(st.mu.mean());
  const auto s = subdivide(pt, 1.0);
  const auto tab = project(st.mu, pt);
  EXPECT_LT(norm(barycentre_field(st.mu, tab, pushforward(tab, s, st.mu), s, 2.0).net), 1e-13);
}

TEST(NetField, TranslationInvariant) {
  const auto st = make(3.0, 6);
  Vec c = st.mu.coords();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] += k % 2 ? -2.0 : 5.0;
  const DiscreteMeasure mu(2, c, st.mu.weights());
  const auto net = translate(st.net, Vec{5.0, -2.0});
  const auto s = subdivide(net, 0.02);
  const auto tab = project(mu, net);
  const auto f = barycentre_field(mu, tab, pushforward(tab, s, mu), s, 3.0);
  EXPECT_NEAR(f.net[0], st.field.net[0], 1e-10);
  EXPECT_NEAR(f.net[1], st.field.net[1], 1e-10);
}

TEST(Mollify, ConstantFieldReproduced) {
  auto st = make(2.0, 7);
  for (std::size_t k = 0; k < st.field.size(); ++k) {
    st.field.b[2 * k] = 0.3;
    st.field.b[2 * k + 1] = -0.4;
  }
  st.field.l2sq = 0.25;
  const auto xi = mollify(st.field, st.s, 0.1);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    EXPECT_NEAR(xi.at(k)[0], 0.3, 1e-12);
    EXPECT_NEAR(xi.at(k)[1], -0.4, 1e-12);
  }
  EXPECT_NEAR(xi.pairing, 0.25, 1e-12);
}

TEST(Mollify, PairingAboveHalfAndSmallBandwidthLimit) {
  const auto st = make(2.0, 8);
  const auto xi = mollify(st.field, st.s, 0.5);
  EXPECT_GT(xi.pairing, 0.5 * st.field.l2sq);
  EXPECT_NEAR(pairing(xi, st.field), xi.pairing, 1e-15);
  const auto sharp = mollify(st.field, st.s, 1e-6);
  for (std::size_t k = 0; k < st.field.size(); ++k)
    if (st.field.mass[k] > 0.0) {
      EXPECT_NEAR(dist(sharp.at(k), st.field.at(k)), 0.0, 1e-9);
    }
}

TEST(Mollify, LambdaUsesLargerReciprocal) {
  LipschitzField xi;
  xi.lip_estimate = 4.0;
  xi.sup_norm = 0.5;
  EXPECT_DOUBLE_EQ(xi.lambda(), 2.0);
}

TEST(FirstVariation, LinearityIdentities) {
  const auto st = make(2.0, 9);
  const auto constant = lipschitz_field_from(st.s, [](ConstPoint) { return Vec{0.7, -0.2}; }, 0.0);
  EXPECT_NEAR(first_variation(st.field, constant), -(0.7 * st.field.net[0] - 0.2 * st.field.net[1]), 1e-14);

  LipschitzField self;
  self.dim = 2;
  self.xi = st.field.b;
  EXPECT_NEAR(first_variation(st.field, self), -st.field.l2sq, 1e-14);

  const auto scaling = lipschitz_field_from(st.s, [](ConstPoint x) { return Vec{-x[0], -x[1]}; }, 1.0);
  double expect = 0.0;
  for (std::size_t k = 0; k < st.s.size(); ++k) expect += dot(st.s.position(k), st.field.at(k)) * st.field.mass[k];
  EXPECT_NEAR(first_variation(st.field, scaling), expect, 1e-14);
}

TEST(FirstVariation, NodeSetMismatch) {
  const auto st = make(2.0, 10);
  const auto other = lipschitz_field_from(subdivide(st.net, 0.5), [](ConstPoint) { return Vec{1, 0}; }, 0.0);
  EXPECT_THROW(first_variation(st.field, other), ValidationError);
}
