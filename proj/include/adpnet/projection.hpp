#pragma once

#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

#include "measure.hpp"
#include "network.hpp"

namespace adpnet {

/// Closest-point data per measure point. Feet are stored row-major.
struct ProjectionTable {
  int dim = 0;
  Vec distance;
  std::vector<int> edge;  // -1 when the network is a single vertex
  Vec t;
  Vec feet;
  std::vector<char> ambiguous;

  std::size_t size() const { return distance.size(); }
  ConstPoint foot(std::size_t i) const {
    return {feet.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

struct ProjectionOptions {
  double rel_tol = 1e-9;         // distance ties, relative to the scale
  double sep_tol_factor = 1e-6;  // distinct feet, relative to the scale
  double scale = 0.0;            // measure diameter; <= 0 computes it from the hull
  bool accelerated = true;
};

namespace detail {

struct SegmentHit {
  double distance;
  double t;
};

inline SegmentHit closest_on_segment(ConstPoint x, ConstPoint a, ConstPoint b, double *foot) {
  const std::size_t d = x.size();
  double ab2 = 0.0, proj = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double u = b[k] - a[k];
    ab2 += u * u;
    proj += (x[k] - a[k]) * u;
  }
  const double t = std::clamp(proj / ab2, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    foot[k] = a[k] + t * (b[k] - a[k]);
    const double r = x[k] - foot[k];
    s += r * r;
  }
  return {std::sqrt(s), t};
}

}  // namespace detail

/// Bounding-volume hierarchy over network edges.
class EdgeIndex {
 public:
  explicit EdgeIndex(const Network &net) : net_(&net), d_(static_cast<std::size_t>(net.dim())) {
    order_.resize(net.edge_count());
    std::iota(order_.begin(), order_.end(), 0);
    if (!order_.empty()) build(0, order_.size());
  }

  /// Calls visit(e) for every edge whose box lies within `radius()` of x,
  /// nearest boxes first. `radius` is re-read after each visit so callers can
  /// shrink it.
  template <class Radius, class Visit>
  void query(ConstPoint x, Radius &&radius, Visit &&visit) const {
    if (nodes_.empty()) return;
    thread_local std::vector<std::pair<double, int>> stack;
    stack.clear();
    stack.push_back({box_dist(0, x), 0});
    while (!stack.empty()) {
      const auto [lb, id] = stack.back();
      stack.pop_back();
      const double r = radius();
      if (r < 0.0 || lb > r + 1e-12 * r) continue;  // slack keeps exact ties
      const Node &nd = nodes_[static_cast<std::size_t>(id)];
      if (nd.left < 0) {
        for (std::size_t k = nd.first; k < nd.first + nd.count; ++k) visit(order_[k]);
        continue;
      }
      const double dl = box_dist(nd.left, x), dr = box_dist(nd.right, x);
      if (dl <= dr) {
        stack.push_back({dr, nd.right});
        stack.push_back({dl, nd.left});
      } else {
        stack.push_back({dl, nd.left});
        stack.push_back({dr, nd.right});
      }
    }
  }

 private:
  struct Node {
    Vec lo, hi;
    int left = -1, right = -1;
    std::size_t first = 0, count = 0;
  };

  int build(std::size_t first, std::size_t count) {
    Node nd;
    nd.lo.assign(d_, std::numeric_limits<double>::infinity());
    nd.hi.assign(d_, -std::numeric_limits<double>::infinity());
    for (std::size_t k = first; k < first + count; ++k) {
      const auto [a, b] = net_->edge(order_[k]);
      for (int v : {a, b}) {
        auto p = net_->vertex(static_cast<std::size_t>(v));
        for (std::size_t c = 0; c < d_; ++c) {
          nd.lo[c] = std::min(nd.lo[c], p[c]);
          nd.hi[c] = std::max(nd.hi[c], p[c]);
        }
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(nd);
    if (count <= 4) {
      nodes_[static_cast<std::size_t>(id)].first = first;
      nodes_[static_cast<std::size_t>(id)].count = count;
      return id;
    }
    std::size_t axis = 0;
    for (std::size_t c = 1; c < d_; ++c)
      if (nd.hi[c] - nd.lo[c] > nd.hi[axis] - nd.lo[axis]) axis = c;
    auto centre = [&](std::size_t e) {
      const auto [a, b] = net_->edge(e);
      return net_->vertex(static_cast<std::size_t>(a))[axis] + net_->vertex(static_cast<std::size_t>(b))[axis];
    };
    const std::size_t mid = first + count / 2;
    std::nth_element(order_.begin() + static_cast<long>(first), order_.begin() + static_cast<long>(mid),
                     order_.begin() + static_cast<long>(first + count),
                     [&](std::size_t e, std::size_t f) { return centre(e) < centre(f) || (centre(e) == centre(f) && e < f); });
    const int l = build(first, mid - first);
    const int r = build(mid, first + count - mid);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  double box_dist(int id, ConstPoint x) const {
    const Node &nd = nodes_[static_cast<std::size_t>(id)];
    double s = 0.0;
    for (std::size_t c = 0; c < d_; ++c) {
      const double g = std::max({nd.lo[c] - x[c], 0.0, x[c] - nd.hi[c]});
      s += g * g;
    }
    return std::sqrt(s);
  }

  const Network *net_;
  std::size_t d_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Closest-point projection of every measure point onto the network. Ties are
/// broken by lowest edge index; the accelerated and brute-force paths return
/// identical tables.
inline ProjectionTable project(const DiscreteMeasure &measure, const Network &net,
                               const ProjectionOptions &opt = {}) {
  if (measure.dim() != net.dim())
    throw ValidationError("dimension mismatch: measure has d=" + std::to_string(measure.dim()) +
                          ", network has d=" + std::to_string(net.dim()));
  const std::size_t n = measure.size();
  const auto d = static_cast<std::size_t>(net.dim());
  const double scale = opt.scale > 0.0 ? opt.scale : hull_summary(measure).diameter;
  const double tie = opt.rel_tol * scale;
  const double sep = opt.sep_tol_factor * scale;

  ProjectionTable tab;
  tab.dim = net.dim();
  tab.distance.assign(n, 0.0);
  tab.edge.assign(n, -1);
  tab.t.assign(n, 0.0);
  tab.feet.assign(n * d, 0.0);
  tab.ambiguous.assign(n, 0);

  if (net.edge_count() == 0) {
    auto v = net.vertex(0);
    for (std::size_t i = 0; i < n; ++i) {
      tab.distance[i] = dist(measure.point(i), v);
      std::copy(v.begin(), v.end(), tab.feet.begin() + static_cast<long>(i * d));
    }
    return tab;
  }

  std::optional<EdgeIndex> index;
  if (opt.accelerated) index.emplace(net);
  const std::size_t m = net.edge_count();

  parallel_for(n, [&](std::size_t i) {
    auto x = measure.point(i);
    thread_local Vec foot, best_foot;
    foot.resize(d);
    best_foot.resize(d);
    double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
    int best_e = -1;
    auto consider = [&](std::size_t e) {
      const auto [a, b] = net.edge(e);
      const auto hit = detail::closest_on_segment(x, net.vertex(static_cast<std::size_t>(a)),
                                                  net.vertex(static_cast<std::size_t>(b)), foot.data());
      const int ei = static_cast<int>(e);
      if (hit.distance < best || (hit.distance == best && ei < best_e)) {
        best = hit.distance;
        best_e = ei;
        best_t = hit.t;
        best_foot = foot;
      }
    };
    if (index)
      index->query(x, [&] { return best; }, consider);
    else
      for (std::size_t e = 0; e < m; ++e) consider(e);

    bool amb = false;
    const double reach = best + tie;
    auto second = [&](std::size_t e) {
      if (amb || static_cast<int>(e) == best_e) return;
      const auto [a, b] = net.edge(e);
      const auto hit = detail::closest_on_segment(x, net.vertex(static_cast<std::size_t>(a)),
                                                  net.vertex(static_cast<std::size_t>(b)), foot.data());
      if (hit.distance <= reach && dist(foot, best_foot) > sep) amb = true;
    };
    if (index)
      index->query(x, [&] { return amb ? -1.0 : reach; }, second);
    else
      for (std::size_t e = 0; e < m; ++e) second(e);

    tab.distance[i] = best;
    tab.edge[i] = best_e;
    tab.t[i] = best_t;
    std::copy(best_foot.begin(), best_foot.end(), tab.feet.begin() + static_cast<long>(i * d));
    tab.ambiguous[i] = amb ? 1 : 0;
  });
  return tab;
}

/// All-edges scan; the reference the accelerated path must reproduce.
inline ProjectionTable project_brute(const DiscreteMeasure &measure, const Network &net,
                                     ProjectionOptions opt = {}) {
  opt.accelerated = false;
  return project(measure, net, opt);
}

inline double ambiguous_mass(const ProjectionTable &tab, const DiscreteMeasure &measure) {
  double s = 0.0;
  for (std::size_t i = 0; i < tab.size(); ++i)
    if (tab.ambiguous[i]) s += measure.weight(i);
  return std::min(1.0, s);
}

/// Index, distance, edge, t, ambiguous.
inline void write_projection_csv(std::ostream &os, const ProjectionTable &tab) {
  os << "index,distance,edge,t,ambiguous\n";
  char buf[128];
  for (std::size_t i = 0; i < tab.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g,%d\n", i, tab.distance[i], tab.edge[i], tab.t[i],
                  tab.ambiguous[i] ? 1 : 0);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Pushforward onto a sampled network

struct PushforwardMeasure {
  Vec node_mass;
  std::vector<std::vector<int>> fiber;
  std::vector<int> node_of_point;

  std::size_t size() const { return node_mass.size(); }
};

/// Assigns each measure point to the sampled node nearest its foot along the
/// owning edge.
inline PushforwardMeasure pushforward(const ProjectionTable &tab, const SampledNetwork &sampled,
                                      const DiscreteMeasure &measure) {
  if (tab.size() != measure.size()) throw ValidationError("projection table does not match measure");
  PushforwardMeasure pf;
  pf.node_mass.assign(sampled.size(), 0.0);
  pf.fiber.resize(sampled.size());
  pf.node_of_point.resize(tab.size());
  for (std::size_t i = 0; i < tab.size(); ++i) {
    if (tab.edge[i] >= static_cast<int>(sampled.base.edge_count()))
      throw ValidationError("projection table was computed against a different network");
    const int node = sampled.nearest_node(tab.edge[i], tab.t[i]);
    pf.node_of_point[i] = node;
    pf.fiber[static_cast<std::size_t>(node)].push_back(static_cast<int>(i));
    pf.node_mass[static_cast<std::size_t>(node)] += measure.weight(i);
  }
  return pf;
}

}  // namespace adpnet
