#pragma once

#include <array>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include <json.hpp>

#include "core.hpp"

namespace adpnet {

using Edge = std::array<int, 2>;

inline constexpr double kMinEdgeLength = 1e-12;

/// Connected straight-edge graph embedded in R^d. A single vertex with no
/// edges is a valid (zero-length) network.
class Network {
 public:
  Network() = default;

  Network(int dim, Vec coords, std::vector<Edge> edges)
      : dim_(dim), coords_(std::move(coords)), edges_(std::move(edges)) {
    validate();
  }

  static Network point(ConstPoint x) {
    return Network(static_cast<int>(x.size()), Vec(x.begin(), x.end()), {});
  }

  int dim() const { return dim_; }
  std::size_t vertex_count() const { return dim_ ? coords_.size() / static_cast<std::size_t>(dim_) : 0; }
  std::size_t edge_count() const { return edges_.size(); }
  ConstPoint vertex(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const Vec &coords() const { return coords_; }
  const std::vector<Edge> &edges() const { return edges_; }
  const Edge &edge(std::size_t e) const { return edges_[e]; }

  double edge_length(std::size_t e) const {
    return dist(vertex(static_cast<std::size_t>(edges_[e][0])), vertex(static_cast<std::size_t>(edges_[e][1])));
  }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(vertex_count());
    for (const auto &[a, b] : edges_) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    return adj;
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(vertex_count(), 0);
    for (const auto &[a, b] : edges_) {
      ++deg[static_cast<std::size_t>(a)];
      ++deg[static_cast<std::size_t>(b)];
    }
    return deg;
  }

  /// Same combinatorics, new vertex positions (revalidated).
  Network with_coords(Vec coords) const { return Network(dim_, std::move(coords), edges_); }

  bool connected() const {
    const std::size_t n = vertex_count();
    if (n == 0) return false;
    auto adj = adjacency();
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[static_cast<std::size_t>(v)])
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == n;
  }

 private:
  void validate() const {
    if (dim_ < 1) throw ValidationError("network dimension must be positive");
    if (coords_.empty() || coords_.size() % static_cast<std::size_t>(dim_) != 0)
      throw ValidationError("network needs at least one vertex");
    for (double c : coords_)
      if (!std::isfinite(c)) throw ValidationError("network vertex coordinate is not finite");
    const auto n = static_cast<int>(vertex_count());
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      auto [a, b] = edges_[e];
      if (a < 0 || b < 0 || a >= n || b >= n)
        throw ValidationError("edge " + std::to_string(e) + " references a missing vertex");
      if (a == b) throw ValidationError("edge " + std::to_string(e) + " is a self-loop");
      if (!seen.insert({std::min(a, b), std::max(a, b)}).second)
        throw ValidationError("edge " + std::to_string(e) + " duplicates an earlier edge");
      if (edge_length(e) < kMinEdgeLength)
        throw DegenerateGeometryError("edge " + std::to_string(e) + " has zero length");
    }
    if (!connected()) throw ValidationError("network is not connected");
  }

  int dim_ = 0;
  Vec coords_;
  std::vector<Edge> edges_;
};

inline double total_length(const Network &net) {
  double s = 0.0;
  for (std::size_t e = 0; e < net.edge_count(); ++e) s += net.edge_length(e);
  return s;
}

// ---------------------------------------------------------------------------
// Topology

struct TopologyReport {
  int endpoint_count = 0;
  int branch_point_count = 0;
  int max_degree = 0;
  long cycle_rank = 0;
  std::vector<int> articulation_vertex_ids;
  std::vector<int> endpoint_vertex_ids;
};

/// Degree statistics plus cut vertices via iterative Hopcroft-Tarjan low-link.
inline TopologyReport topology_report(const Network &net) {
  if (!net.connected()) throw ValidationError("topology_report needs a connected network");
  const std::size_t n = net.vertex_count();
  TopologyReport r;
  const auto deg = net.degrees();
  for (std::size_t v = 0; v < n; ++v) {
    r.max_degree = std::max(r.max_degree, deg[v]);
    if (deg[v] == 1) {
      ++r.endpoint_count;
      r.endpoint_vertex_ids.push_back(static_cast<int>(v));
    }
    if (deg[v] >= 3) ++r.branch_point_count;
  }
  r.cycle_rank = static_cast<long>(net.edge_count()) - static_cast<long>(n) + 1;

  const auto adj = net.adjacency();
  std::vector<int> disc(n, -1), low(n, 0), parent(n, -1);
  std::vector<std::size_t> next(n, 0);
  std::vector<char> is_cut(n, 0);
  int timer = 0;
  int root_children = 0;
  std::vector<int> stack{0};
  disc[0] = low[0] = timer++;
  while (!stack.empty()) {
    const int v = stack.back();
    const auto uv = static_cast<std::size_t>(v);
    if (next[uv] < adj[uv].size()) {
      const int w = adj[uv][next[uv]++];
      const auto uw = static_cast<std::size_t>(w);
      if (disc[uw] < 0) {
        parent[uw] = v;
        disc[uw] = low[uw] = timer++;
        if (v == 0) ++root_children;
        stack.push_back(w);
      } else if (w != parent[uv]) {
        low[uv] = std::min(low[uv], disc[uw]);
      }
    } else {
      stack.pop_back();
      const int p = parent[uv];
      if (p >= 0) {
        const auto up = static_cast<std::size_t>(p);
        low[up] = std::min(low[up], low[uv]);
        if (p != 0 && low[uv] >= disc[up]) is_cut[up] = 1;
      }
    }
  }
  if (root_children >= 2) is_cut[0] = 1;
  for (std::size_t v = 0; v < n; ++v)
    if (is_cut[v]) r.articulation_vertex_ids.push_back(static_cast<int>(v));
  return r;
}

// ---------------------------------------------------------------------------
// Sampling

struct SampleNode {
  int edge = -1;  // owning edge, -1 for an isolated vertex
  double t = 0.0;
  Vec position;
};

/// Network discretized at spacing <= h. Nodes 0..V-1 are the vertices in
/// order; interior nodes follow edge by edge.
struct SampledNetwork {
  Network base;
  std::vector<SampleNode> nodes;
  double spacing = 0.0;
  // Per edge: node ids from the edge's first vertex to its second.
  std::vector<std::vector<int>> edge_nodes;

  std::size_t size() const { return nodes.size(); }
  ConstPoint position(std::size_t i) const { return nodes[i].position; }

  /// Node on edge e nearest to parameter t.
  int nearest_node(int e, double t) const {
    if (e < 0) return 0;
    const auto &ids = edge_nodes[static_cast<std::size_t>(e)];
    const auto segs = static_cast<double>(ids.size() - 1);
    const long k = std::lround(std::clamp(t, 0.0, 1.0) * segs);
    return ids[static_cast<std::size_t>(k)];
  }
};

inline SampledNetwork subdivide(const Network &net, double h) {
  if (!(h > 0.0)) throw ValidationError("subdivision spacing must be positive");
  SampledNetwork s{net, {}, h, {}};
  const std::size_t nv = net.vertex_count();
  std::vector<int> first_edge(nv, -1);
  std::vector<double> first_t(nv, 0.0);
  for (std::size_t e = net.edge_count(); e-- > 0;) {
    first_edge[static_cast<std::size_t>(net.edge(e)[0])] = static_cast<int>(e);
    first_t[static_cast<std::size_t>(net.edge(e)[0])] = 0.0;
    first_edge[static_cast<std::size_t>(net.edge(e)[1])] = static_cast<int>(e);
    first_t[static_cast<std::size_t>(net.edge(e)[1])] = 1.0;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    auto x = net.vertex(v);
    s.nodes.push_back({first_edge[v], first_t[v], Vec(x.begin(), x.end())});
  }
  const auto d = static_cast<std::size_t>(net.dim());
  s.edge_nodes.resize(net.edge_count());
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto [a, b] = net.edge(e);
    auto pa = net.vertex(static_cast<std::size_t>(a)), pb = net.vertex(static_cast<std::size_t>(b));
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(net.edge_length(e) / h)));
    auto &ids = s.edge_nodes[e];
    ids.push_back(a);
    for (std::size_t j = 1; j < k; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(k);
      Vec x(d);
      for (std::size_t c = 0; c < d; ++c) x[c] = pa[c] + t * (pb[c] - pa[c]);
      ids.push_back(static_cast<int>(s.nodes.size()));
      s.nodes.push_back({static_cast<int>(e), t, std::move(x)});
    }
    ids.push_back(b);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Cleanup

/// Merges vertices closer than min_edge into the lowest-index vertex of their
/// cluster (star clustering: every vertex moves by less than min_edge), then
/// drops self-loops and duplicate edges. Connectivity is preserved.
inline Network simplify(const Network &net, double min_edge) {
  if (min_edge < 0.0) throw ValidationError("min_edge must be nonnegative");
  const std::size_t n = net.vertex_count();
  std::vector<int> anchor(n, -1);
  std::vector<int> new_id(n, -1);
  Vec coords;
  int next_id = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (anchor[v] >= 0) continue;
    anchor[v] = static_cast<int>(v);
    new_id[v] = next_id++;
    auto x = net.vertex(v);
    coords.insert(coords.end(), x.begin(), x.end());
    if (min_edge == 0.0) continue;
    for (std::size_t w = v + 1; w < n; ++w)
      if (anchor[w] < 0 && dist(x, net.vertex(w)) < min_edge) {
        anchor[w] = static_cast<int>(v);
        new_id[w] = new_id[v];
      }
  }
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  for (const auto &[a, b] : net.edges()) {
    const int na = new_id[static_cast<std::size_t>(a)], nb = new_id[static_cast<std::size_t>(b)];
    if (na == nb) continue;
    if (seen.insert({std::min(na, nb), std::max(na, nb)}).second) edges.push_back({na, nb});
  }
  return Network(net.dim(), std::move(coords), std::move(edges));
}

// ---------------------------------------------------------------------------
// Serialization: {"dim": d, "vertices": [[...]], "edges": [[i,j],...]}

inline nlohmann::json network_to_json(const Network &net) {
  nlohmann::json verts = nlohmann::json::array();
  for (std::size_t v = 0; v < net.vertex_count(); ++v) {
    auto x = net.vertex(v);
    verts.push_back(Vec(x.begin(), x.end()));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto &[a, b] : net.edges()) edges.push_back({a, b});
  return {{"dim", net.dim()}, {"vertices", verts}, {"edges", edges}};
}

inline Network network_from_json(const nlohmann::json &j) {
  try {
    const int dim = j.at("dim").get<int>();
    Vec coords;
    for (const auto &v : j.at("vertices")) {
      if (v.size() != static_cast<std::size_t>(dim))
        throw ValidationError("network vertex has wrong dimension");
      for (const auto &c : v) coords.push_back(c.get<double>());
    }
    std::vector<Edge> edges;
    for (const auto &e : j.at("edges")) {
      if (e.size() != 2) throw ValidationError("network edge must have two endpoints");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return Network(dim, std::move(coords), std::move(edges));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("network JSON: ") + e.what());
  }
}

inline Network load_network(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open network file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(e.what(), 1);
  }
  // Accept either a bare network or a solve result carrying one.
  if (j.contains("network")) return network_from_json(j.at("network"));
  return network_from_json(j);
}

}  // namespace adpnet
