#include <gtest/gtest.h>

#include <deque>

#include "helpers.hpp"

using namespace adpnet;

namespace {

Network path3() { return Network(2, {0, 0, 1, 0, 2, 0, 3, 0}, {{0, 1}, {1, 2}, {2, 3}}); }

bool connected_by_bfs(const Network &net) {
  const auto adj = net.adjacency();
  std::vector<char> seen(net.vertex_count(), 0);
  std::deque<int> q{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int u : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++count;
        q.push_back(u);
      }
  }
  return count == net.vertex_count();
}

}  // namespace

TEST(Network, TotalLength) {
  EXPECT_DOUBLE_EQ(total_length(testutil::segment({0, 0}, {1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(total_length(path3()), 3.0);
  const auto s = shrink(path3(), 0.25, Vec{1, 1});
  EXPECT_NEAR(total_length(s), 0.75 * 3.0, 1e-12);
}

TEST(Network, RejectsInvalid) {
  EXPECT_THROW(Network(2, {0, 0, 1, 0, 5, 5}, {{0, 1}}), ValidationError);  // disconnected
  EXPECT_THROW(Network(2, {0, 0, 1, 0}, {{0, 2}}), ValidationError);
  EXPECT_THROW(Network(2, {0, 0, 0, 0}, {{0, 1}}), Error);  // zero-length edge
}

TEST(Topology, PathStarTriangle) {
  auto r = topology_report(path3());
  EXPECT_EQ(r.endpoint_count, 2);
  EXPECT_EQ(r.branch_point_count, 0);
  EXPECT_EQ(r.cycle_rank, 0);
  EXPECT_EQ(r.articulation_vertex_ids, (std::vector<int>{1, 2}));

  const Network star(2, {0, 0, 1, 0, -1, 0, 0, 1}, {{0, 1}, {0, 2}, {0, 3}});
  r = topology_report(star);
  EXPECT_EQ(r.endpoint_count, 3);
  EXPECT_EQ(r.branch_point_count, 1);
  EXPECT_EQ(r.max_degree, 3);
  EXPECT_EQ(r.cycle_rank, 0);

  const Network tri(2, {0, 0, 1, 0, 0, 1}, {{0, 1}, {1, 2}, {2, 0}});
  r = topology_report(tri);
  EXPECT_EQ(r.endpoint_count, 0);
  EXPECT_EQ(r.cycle_rank, 1);
  EXPECT_TRUE(r.articulation_vertex_ids.empty());
}

// Cut vertices against the definition: removing the vertex disconnects the rest.
TEST(Topology, ArticulationMatchesRemovalOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Network tree = testutil::random_tree(rng, 2, 9);
    std::vector<Edge> edges = tree.edges();
    edges.push_back({0, 8});
    edges.push_back({2, 5});
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const Network net(2, tree.coords(), edges);
    std::vector<int> expect;
    for (int v = 0; v < 9; ++v) {
      std::vector<std::vector<int>> adj(9);
      for (const auto &[a, b] : edges)
        if (a != v && b != v) {
          adj[static_cast<std::size_t>(a)].push_back(b);
          adj[static_cast<std::size_t>(b)].push_back(a);
        }
      const int start = v == 0 ? 1 : 0;
      std::vector<char> seen(9, 0);
      std::vector<int> stack{start};
      seen[static_cast<std::size_t>(start)] = 1;
      int count = 1;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(u)])
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            ++count;
            stack.push_back(w);
          }
      }
      if (count < 8) expect.push_back(v);
    }
    EXPECT_EQ(topology_report(net).articulation_vertex_ids, expect);
  }
}

TEST(Subdivide, EvenDivision) {
  const auto s = subdivide(testutil::segment({0, 0}, {1, 0}), 0.5);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.edge_nodes[0], (std::vector<int>{0, 2, 1}));
  EXPECT_DOUBLE_EQ(s.position(2)[0], 0.5);
}

TEST(Subdivide, CoarseSpacingKeepsEndpoints) {
  const auto s = subdivide(testutil::segment({0, 0}, {1, 0}), 2.0);
  EXPECT_EQ(s.size(), 2u);
}

TEST(Subdivide, PositionsMatchInterpolation) {
  std::mt19937_64 rng(2);
  const auto net = testutil::random_tree(rng, 3, 7);
  const auto s = subdivide(net, 0.05);
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto &ids = s.edge_nodes[e];
    EXPECT_EQ(ids.front(), net.edge(e)[0]);
    EXPECT_EQ(ids.back(), net.edge(e)[1]);
    for (std::size_t k = 0; k + 1 < ids.size(); ++k)
      EXPECT_LE(dist(s.position(static_cast<std::size_t>(ids[k])), s.position(static_cast<std::size_t>(ids[k + 1]))),
                0.05 + 1e-12);
  }
  for (std::size_t k = net.vertex_count(); k < s.size(); ++k) {
    const auto &node = s.nodes[k];
    const auto [a, b] = net.edge(static_cast<std::size_t>(node.edge));
    for (int c = 0; c < 3; ++c) {
      const double expect = net.vertex(static_cast<std::size_t>(a))[c] +
                            node.t * (net.vertex(static_cast<std::size_t>(b))[c] - net.vertex(static_cast<std::size_t>(a))[c]);
      EXPECT_NEAR(node.position[static_cast<std::size_t>(c)], expect, 1e-12);
    }
  }
}

TEST(Simplify, KeepsDegreeTwoVertex) {
  const auto out = simplify(path3(), 1e-6);
  EXPECT_EQ(out.vertex_count(), 4u);
  EXPECT_EQ(out.coords(), path3().coords());
}

TEST(Simplify, MergesShortEdgeAndStaysConnected) {
  const Network net(2, {0, 0, 1, 0, 1.0005, 0, 1, 1, 2, 0}, {{0, 1}, {1, 2}, {2, 3}, {2, 4}});
  const auto out = simplify(net, 1e-3);
  EXPECT_EQ(out.vertex_count(), 4u);
  EXPECT_EQ(out.edge_count(), 3u);
  EXPECT_TRUE(connected_by_bfs(out));
}

TEST(NetworkJson, RoundTrip) {
  const Network star(2, {0, 0, 1, 0, -1, 0, 0, 1}, {{0, 1}, {0, 2}, {0, 3}});
  const auto back = network_from_json(network_to_json(star));
  EXPECT_EQ(back.coords(), star.coords());
  EXPECT_EQ(back.edges(), star.edges());
}
