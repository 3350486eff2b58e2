#pragma once

#include <adpnet/adpnet.hpp>

#include <random>

namespace testutil {

using namespace adpnet;

/// Random tree on `nv` uniform points of the unit cube, each vertex joined to
/// an earlier one.
inline Network random_tree(std::mt19937_64 &rng, int d, int nv) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec coords;
  std::vector<Edge> edges;
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k < d; ++k) coords.push_back(u(rng));
    if (v > 0) edges.push_back({std::uniform_int_distribution<int>(0, v - 1)(rng), v});
  }
  return Network(d, std::move(coords), std::move(edges));
}

inline Network segment(Vec a, Vec b) {
  const int d = static_cast<int>(a.size());
  a.insert(a.end(), b.begin(), b.end());
  return Network(d, std::move(a), {{0, 1}});
}

inline DiscreteMeasure points(int d, Vec coords, Vec weights = {}) {
  return DiscreteMeasure(d, std::move(coords), std::move(weights));
}

/// Distance to a network by scanning points spaced at most h along every edge.
inline double dense_distance(ConstPoint x, const Network &net, double h, Vec *foot = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  const auto d = static_cast<std::size_t>(net.dim());
  Vec y(d);
  for (const auto &[a, b] : net.edges()) {
    auto pa = net.vertex(static_cast<std::size_t>(a)), pb = net.vertex(static_cast<std::size_t>(b));
    const auto steps = static_cast<long>(std::ceil(dist(pa, pb) / h));
    for (long s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(steps);
      for (std::size_t c = 0; c < d; ++c) y[c] = pa[c] + t * (pb[c] - pa[c]);
      const double r = dist(x, y);
      if (r < best) {
        best = r;
        if (foot) *foot = y;
      }
    }
  }
  return best;
}

}  // namespace testutil
