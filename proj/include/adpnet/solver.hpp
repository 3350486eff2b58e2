#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "perturb.hpp"

namespace adpnet {

enum class SolveMode { hard, soft };
enum class InitStrategy { principal_segment, mst_of_centers, point };

struct TopologyConfig {
  double prune_mass_tol = 1e-4;
  double atom_insert_threshold = 0.0;  // slack budget needed to graft at an endpoint; 0 = auto, < 0 = off
  double min_edge = 0.0;               // 0 = 1e-6 * M
  double max_edge = 0.0;               // edges longer than this are split; 0 = 0.03 * M
  int every = 10;                      // maintenance period in iterations
};

struct SolverConfig {
  double p = 2.0;
  SolveMode mode = SolveMode::hard;
  double length = 1.0;  // hard mode budget
  double lambda = 0.0;  // soft mode penalty
  double h = 0.0;       // sampling spacing; 0 = 0.01 * M
  double step = 0.5;
  int max_iters = 5000;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
  double bandwidth = 0.0;  // initial mollification bandwidth; 0 = max_edge / 2
  InitStrategy init = InitStrategy::principal_segment;
  int centers = 8;
  double init_jitter = 0.05;  // seeded perpendicular jitter, in units of max_edge
  TopologyConfig topology;

  void validate() const {
    if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
    if (mode == SolveMode::hard && !(length >= 0.0)) throw ValidationError("length budget must be nonnegative");
    if (mode == SolveMode::soft && !(lambda > 0.0)) throw ValidationError("soft mode needs lambda > 0");
    if (h < 0.0 || step <= 0.0 || max_iters < 0 || grad_tol <= 0.0 || bandwidth < 0.0)
      throw ValidationError("solver tolerances must be positive");
    if (topology.every < 1 || topology.prune_mass_tol < 0.0 || topology.min_edge < 0.0 || topology.max_edge < 0.0)
      throw ValidationError("topology settings must be positive");
  }
};

struct TraceRow {
  double j_p = 0.0, h1 = 0.0, b_l2sq = 0.0, net_norm = 0.0;
};

struct SolveResult {
  Network network;
  double j_value = 0.0;
  double objective = 0.0;  // j_value, plus lambda * H1 in soft mode
  BarycentreField field;
  SampledNetwork sampled;
  std::optional<LipschitzField> xi;
  int iterations = 0;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::vector<std::string> diagnostics;
  double scale = 0.0;  // measure diameter M
  double h = 0.0;
};

// ---------------------------------------------------------------------------
// Building blocks

/// Homothety about center so that the length is at most l; l = 0 collapses
/// the network to the centre point.
inline Network enforce_length(const Network &net, double l, ConstPoint center) {
  if (l < 0.0) throw ValidationError("length budget must be nonnegative");
  const double len = total_length(net);
  if (len <= l) return net;
  if (l == 0.0) return Network::point(center);
  const double ratio = l / len;
  const auto d = static_cast<std::size_t>(net.dim());
  Vec coords = net.coords();
  for (std::size_t v = 0; v < net.vertex_count(); ++v)
    for (std::size_t c = 0; c < d; ++c) coords[v * d + c] = center[c] + ratio * (coords[v * d + c] - center[c]);
  return net.with_coords(std::move(coords));
}

inline Network translate(const Network &net, ConstPoint shift) {
  const auto d = static_cast<std::size_t>(net.dim());
  Vec coords = net.coords();
  for (std::size_t k = 0; k < coords.size(); ++k) coords[k] += shift[k % d];
  return net.with_coords(std::move(coords));
}

/// Inserts a vertex at the foot of `point` (which must lie within tol of the
/// network). Returns the new network and the vertex id.
inline std::pair<Network, int> snap_to_vertex(const Network &net, ConstPoint point, double tol) {
  const auto d = static_cast<std::size_t>(net.dim());
  if (point.size() != d) throw ValidationError("snap point has wrong dimension");
  for (std::size_t v = 0; v < net.vertex_count(); ++v)
    if (dist(net.vertex(v), point) <= std::max(tol, 0.0) * 1e-6 || dist(net.vertex(v), point) == 0.0)
      return {net, static_cast<int>(v)};
  double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
  int best_e = -1;
  Vec foot(d), best_foot(d);
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto [a, b] = net.edge(e);
    auto hit = detail::closest_on_segment(point, net.vertex(static_cast<std::size_t>(a)),
                                          net.vertex(static_cast<std::size_t>(b)), foot.data());
    if (hit.distance < best) {
      best = hit.distance;
      best_t = hit.t;
      best_e = static_cast<int>(e);
      best_foot = foot;
    }
  }
  if (best_e < 0) {
    if (dist(net.vertex(0), point) <= tol) return {net, 0};
    throw ValidationError("snap point is too far from the network");
  }
  if (best > tol) throw ValidationError("snap point is too far from the network");
  const auto [a, b] = net.edge(static_cast<std::size_t>(best_e));
  if (best_t <= 0.0) return {net, a};
  if (best_t >= 1.0) return {net, b};
  if (dist(best_foot, net.vertex(static_cast<std::size_t>(a))) < kMinEdgeLength) return {net, a};
  if (dist(best_foot, net.vertex(static_cast<std::size_t>(b))) < kMinEdgeLength) return {net, b};
  Vec coords = net.coords();
  coords.insert(coords.end(), best_foot.begin(), best_foot.end());
  const int id = static_cast<int>(net.vertex_count());
  std::vector<Edge> edges = net.edges();
  edges[static_cast<std::size_t>(best_e)] = {a, id};
  edges.push_back({id, b});
  return {Network(net.dim(), std::move(coords), std::move(edges)), id};
}

/// Splits every edge longer than max_edge into equal pieces.
inline Network refine(const Network &net, double max_edge) {
  if (!(max_edge > 0.0)) return net;
  const auto d = static_cast<std::size_t>(net.dim());
  Vec coords = net.coords();
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto [a, b] = net.edge(e);
    const auto k = static_cast<int>(std::ceil(net.edge_length(e) / max_edge - 1e-9));
    if (k <= 1) {
      edges.push_back({a, b});
      continue;
    }
    auto pa = net.vertex(static_cast<std::size_t>(a)), pb = net.vertex(static_cast<std::size_t>(b));
    int prev = a;
    for (int j = 1; j < k; ++j) {
      const double t = static_cast<double>(j) / k;
      for (std::size_t c = 0; c < d; ++c) coords.push_back(pa[c] + t * (pb[c] - pa[c]));
      const int id = static_cast<int>(coords.size() / d - 1);
      edges.push_back({prev, id});
      prev = id;
    }
    edges.push_back({prev, b});
  }
  return Network(net.dim(), std::move(coords), std::move(edges));
}

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

inline Vec principal_axis(const DiscreteMeasure &m) {
  const auto d = static_cast<std::size_t>(m.dim());
  const Vec mean = m.mean();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto x = m.point(i);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += m.weight(i) * (x[a] - mean[a]) * (x[b] - mean[b]);
  }
  Vec u(d, 0.0), next(d);
  // Deterministic start that is not orthogonal to a generic top axis.
  for (std::size_t a = 0; a < d; ++a) u[a] = 1.0 / std::sqrt(static_cast<double>(d)) + 1e-3 * static_cast<double>(a);
  for (int it = 0; it < 500; ++it) {
    for (std::size_t a = 0; a < d; ++a) {
      next[a] = 0.0;
      for (std::size_t b = 0; b < d; ++b) next[a] += cov[a * d + b] * u[b];
    }
    const double len = norm(next);
    if (len == 0.0) break;
    for (auto &v : next) v /= len;
    const double change = dist(next, u);
    u = next;
    if (change < 1e-14) break;
  }
  const double len = norm(u);
  for (auto &v : u) v /= len;
  return u;
}

inline std::vector<Vec> weighted_kmeans(const DiscreteMeasure &m, int k, std::uint64_t seed) {
  const std::size_t n = m.size();
  const auto d = static_cast<std::size_t>(m.dim());
  k = std::max(1, std::min<int>(k, static_cast<int>(n)));
  std::mt19937_64 rng(seed);
  std::vector<Vec> centres;
  Vec d2(n, std::numeric_limits<double>::infinity());
  {
    std::discrete_distribution<std::size_t> pick(m.weights().begin(), m.weights().end());
    auto x = m.point(pick(rng));
    centres.emplace_back(x.begin(), x.end());
  }
  while (static_cast<int>(centres.size()) < k) {
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist_sq(m.point(i), centres.back()));
      w[i] = m.weight(i) * d2[i];
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) break;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    auto x = m.point(pick(rng));
    centres.emplace_back(x.begin(), x.end());
  }
  for (int it = 0; it < 30; ++it) {
    std::vector<Vec> sum(centres.size(), Vec(d, 0.0));
    Vec mass(centres.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < centres.size(); ++c)
        if (dist_sq(m.point(i), centres[c]) < dist_sq(m.point(i), centres[best])) best = c;
      auto x = m.point(i);
      for (std::size_t a = 0; a < d; ++a) sum[best][a] += m.weight(i) * x[a];
      mass[best] += m.weight(i);
    }
    for (std::size_t c = 0; c < centres.size(); ++c)
      if (mass[c] > 0.0)
        for (std::size_t a = 0; a < d; ++a) centres[c][a] = sum[c][a] / mass[c];
  }
  // Drop coincident centres.
  std::vector<Vec> unique;
  for (auto &c : centres) {
    bool dup = false;
    for (auto &u : unique) dup |= dist(u, c) < 1e-12;
    if (!dup) unique.push_back(c);
  }
  return unique;
}

}  // namespace detail

struct InitOptions {
  double max_edge = 0.0;  // 0 = 0.03 * M
  int centers = 8;
  std::uint64_t seed = 0;
};

inline Network init_network(const DiscreteMeasure &measure, double l, InitStrategy strategy,
                            const InitOptions &opt = {}) {
  if (l < 0.0) throw ValidationError("length budget must be nonnegative");
  const Vec mean = measure.mean();
  const auto d = static_cast<std::size_t>(measure.dim());
  const double M = hull_summary(measure).diameter;
  const double max_edge = opt.max_edge > 0.0 ? opt.max_edge : 0.03 * std::max(M, 1e-300);
  if (l == 0.0 || strategy == InitStrategy::point || M == 0.0) return Network::point(mean);

  if (strategy == InitStrategy::principal_segment) {
    const Vec u = detail::principal_axis(measure);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < measure.size(); ++i) {
      const double s = dot(sub(measure.point(i), mean), u);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double spread = hi - lo;
    if (!(spread > kMinEdgeLength)) return Network::point(mean);
    const double len = std::min(l, spread);
    double a = -0.5 * len, b = 0.5 * len;
    if (a < lo) {
      b += lo - a;
      a = lo;
    }
    if (b > hi) {
      a -= b - hi;
      b = hi;
    }
    Vec coords;
    for (double s : {a, b})
      for (std::size_t c = 0; c < d; ++c) coords.push_back(mean[c] + s * u[c]);
    return refine(Network(static_cast<int>(d), std::move(coords), {{0, 1}}), max_edge);
  }

  // Minimum spanning tree over weighted k-means centres.
  const auto centres = detail::weighted_kmeans(measure, opt.centers, opt.seed);
  if (centres.size() < 2) return Network::point(mean);
  const std::size_t k = centres.size();
  std::vector<char> in(k, 0);
  Vec best(k, std::numeric_limits<double>::infinity());
  std::vector<int> parent(k, -1);
  best[0] = 0.0;
  std::vector<Edge> edges;
  for (std::size_t round = 0; round < k; ++round) {
    std::size_t v = k;
    for (std::size_t j = 0; j < k; ++j)
      if (!in[j] && (v == k || best[j] < best[v])) v = j;
    in[v] = 1;
    if (parent[v] >= 0) edges.push_back({parent[v], static_cast<int>(v)});
    for (std::size_t j = 0; j < k; ++j) {
      const double w = dist(centres[v], centres[j]);
      if (!in[j] && w < best[j]) {
        best[j] = w;
        parent[j] = static_cast<int>(v);
      }
    }
  }
  Vec coords;
  for (const auto &c : centres) coords.insert(coords.end(), c.begin(), c.end());
  Network tree(static_cast<int>(d), std::move(coords), std::move(edges));
  return refine(enforce_length(tree, l, mean), max_edge);
}

// ---------------------------------------------------------------------------
// Solver

namespace detail {

struct Evaluation {
  ProjectionTable table;
  double j = 0.0;
  double objective = 0.0;
};

class Solver {
 public:
  Solver(const DiscreteMeasure &measure, const SolverConfig &cfg) : mu_(measure), cfg_(cfg) {
    cfg_.validate();
    M_ = hull_summary(measure).diameter;
    const double base = M_ > 0.0 ? M_ : 1.0;
    h_ = cfg.h > 0.0 ? cfg.h : 0.01 * base;
    min_edge_ = cfg.topology.min_edge > 0.0 ? cfg.topology.min_edge : 1e-6 * base;
    max_edge_ = cfg.topology.max_edge > 0.0 ? cfg.topology.max_edge : 0.03 * base;
    bandwidth_ = cfg.bandwidth > 0.0 ? cfg.bandwidth : 0.5 * max_edge_;
    popt_.scale = base;
    atom_threshold_ = cfg.topology.atom_insert_threshold;
    if (atom_threshold_ == 0.0)
      atom_threshold_ = cfg.mode == SolveMode::hard ? std::max(0.02 * cfg.length, max_edge_) : -1.0;
  }

  SolveResult run(std::optional<Network> init) {
    SolveResult res;
    res.scale = M_;
    res.h = h_;
    Network net = init ? *init : initial();
    if (net.dim() != mu_.dim()) throw ValidationError("initial network dimension does not match the measure");
    if (cfg_.mode == SolveMode::hard) net = enforce_length(net, cfg_.length, centroid_of(net));

    Evaluation cur = evaluate(net);
    double step = cfg_.step;
    double shift_step = 1.0 / cfg_.p;
    double grad_factor = 1.0;
    int xi_fail = 0;
    double scale_eps = 0.05;
    double prev_l2 = -1.0;
    int stall = 0;
    int settled = 0;
    double best_obj = cur.objective;

    for (int it = 0; it < cfg_.max_iters; ++it) {
      res.iterations = it + 1;
      auto sampled = subdivide(net, h_);
      auto pf = pushforward(cur.table, sampled, mu_);
      auto field = barycentre_field(mu_, cur.table, pf, sampled, cfg_.p, M_);
      res.trace.push_back({cur.j, total_length(net), field.l2sq, norm(field.net)});
      const double start_obj = cur.objective;

      // Descent along the mollified barycentre field.
      if (field.l2sq > 0.0 && net.edge_count() > 0 && (xi_fail < 3 || it % 10 == 0)) {
        try {
          const LipschitzField xi = mollify(field, sampled, bandwidth_);
          const Vec ctr = weighted_centroid(field, sampled);
          double s = step;
          bool ok = false;
          for (int k = 0; k <= 20; ++k, s *= 0.5) {
            std::optional<Network> trial;
            try {
              trial = deform(net, xi, s);
              if (cfg_.mode == SolveMode::hard) trial = enforce_length(*trial, cfg_.length, ctr);
            } catch (const DegenerateGeometryError &) {
              continue;
            }
            Evaluation ev = evaluate(*trial);
            if (ev.objective < cur.objective) {
              net = std::move(*trial);
              cur = std::move(ev);
              ok = true;
              break;
            }
          }
          step = ok ? std::min(2.0 * s, 4.0 * cfg_.step) : cfg_.step;
          xi_fail = ok ? 0 : xi_fail + 1;
        } catch (const MollificationError &e) {
          note(res, "iteration " + std::to_string(it) + ": " + e.what());
        }
      }

      // Exact vertex gradient, projected onto length-preserving motions in
      // hard mode.
      grad_factor = gradient_step(net, cur, grad_factor);

      // Translation along the net field.
      shift_step = translate_step(net, cur, shift_step);

      if (cfg_.mode == SolveMode::soft) {
        const double e = scaling_step(net, cur, scale_eps, 4);
        scale_eps = e > 0.0 ? std::min(2.0 * e, 0.5) : 0.05;
      }
      if ((it + 1) % cfg_.topology.every == 0) maintain(net, cur, res, it);

      // Convergence: the objective stalls and the field energy settles.
      const double l2 = res.trace.back().b_l2sq;
      const double drop = start_obj - cur.objective;
      // Both tests must hold for a full maintenance cycle; sampling noise in
      // the field energy lets a single iteration pass by chance.
      if (prev_l2 >= 0.0 && std::abs(l2 - prev_l2) < cfg_.grad_tol &&
          drop <= cfg_.grad_tol * std::max(start_obj, 1e-300)) {
        if (++settled >= cfg_.topology.every) {
          res.converged = true;
          break;
        }
      } else {
        settled = 0;
      }
      if (cur.objective < best_obj) {
        best_obj = cur.objective;
        stall = 0;
      } else if (++stall >= 50) {
        note(res, "objective did not decrease over 50 iterations");
        break;
      }
      prev_l2 = l2;
    }

    polish(net, cur);
    fill(res, net, cur);
    return res;
  }

  /// Result fields for a fixed network, without any descent.
  SolveResult describe(const Network &net) const {
    SolveResult res;
    res.scale = M_;
    res.h = h_;
    res.converged = false;
    fill(res, net, evaluate(net));
    return res;
  }

 private:
  void fill(SolveResult &res, const Network &net, const Evaluation &cur) const {
    res.network = net;
    res.j_value = cur.j;
    res.objective = cur.objective;
    res.sampled = subdivide(net, h_);
    auto pf = pushforward(cur.table, res.sampled, mu_);
    res.field = barycentre_field(mu_, cur.table, pf, res.sampled, cfg_.p, M_);
    res.trace.push_back({cur.j, total_length(net), res.field.l2sq, norm(res.field.net)});
    if (res.field.l2sq > 0.0) {
      try {
        res.xi = mollify(res.field, res.sampled, bandwidth_);
      } catch (const MollificationError &e) {
        note(res, std::string("final field: ") + e.what());
      }
    }
  }

  Network initial() const {
    InitOptions io;
    io.max_edge = max_edge_;
    io.centers = cfg_.centers;
    io.seed = cfg_.seed;
    const double l = cfg_.mode == SolveMode::hard ? cfg_.length : 0.25 * M_;
    Network net = init_network(mu_, l, cfg_.init, io);
    if (cfg_.seed == 0 || cfg_.init_jitter <= 0.0 || net.edge_count() == 0) return net;
    // Seeded jitter of interior vertices so restarts explore different basins.
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> g(0.0, cfg_.init_jitter * max_edge_);
    const auto deg = net.degrees();
    Vec coords = net.coords();
    const auto d = static_cast<std::size_t>(net.dim());
    for (std::size_t v = 0; v < net.vertex_count(); ++v)
      for (std::size_t c = 0; c < d; ++c) {
        const double z = g(rng);
        if (deg[v] >= 2) coords[v * d + c] += z;
      }
    try {
      return net.with_coords(std::move(coords));
    } catch (const Error &) {
      return net;
    }
  }

  Evaluation evaluate(const Network &net) const {
    Evaluation ev;
    ev.table = project(mu_, net, popt_);
    ev.j = j_p(mu_, ev.table, cfg_.p);
    ev.objective = ev.j + (cfg_.mode == SolveMode::soft ? cfg_.lambda * total_length(net) : 0.0);
    return ev;
  }

  static Vec weighted_centroid(const BarycentreField &field, const SampledNetwork &sampled) {
    const auto d = static_cast<std::size_t>(field.dim);
    Vec c(d, 0.0);
    double m = 0.0;
    for (std::size_t k = 0; k < field.size(); ++k) {
      if (!(field.mass[k] > 0.0)) continue;
      for (std::size_t a = 0; a < d; ++a) c[a] += field.mass[k] * sampled.position(k)[a];
      m += field.mass[k];
    }
    for (auto &v : c) v /= m;
    return c;
  }

  Vec centroid_of(const Network &net) const {
    const auto tab = project(mu_, net, popt_);
    const auto sampled = subdivide(net, h_);
    const auto pf = pushforward(tab, sampled, mu_);
    const auto d = static_cast<std::size_t>(net.dim());
    Vec c(d, 0.0);
    for (std::size_t k = 0; k < sampled.size(); ++k)
      for (std::size_t a = 0; a < d; ++a) c[a] += pf.node_mass[k] * sampled.position(k)[a];
    return c;
  }

  /// Foot-based net field p * sum w |x - f|^{p-2} (x - f).
  Vec foot_net(const Evaluation &ev) const {
    const auto d = static_cast<std::size_t>(mu_.dim());
    Vec net(d, 0.0);
    for (std::size_t i = 0; i < mu_.size(); ++i) {
      const double r = ev.table.distance[i];
      if (r == 0.0) continue;
      const double w = mu_.weight(i) * cfg_.p * (cfg_.p == 2.0 ? 1.0 : pow0(r, cfg_.p - 2.0));
      auto x = mu_.point(i);
      auto f = ev.table.foot(i);
      for (std::size_t a = 0; a < d; ++a) net[a] += w * (x[a] - f[a]);
    }
    return net;
  }

  /// Preconditioned descent direction for the vertex positions: the exact
  /// gradient of J_p (plus lambda H1 in soft mode) divided by a lumped
  /// diagonal Hessian, so a unit step moves a vertex roughly to its fiber
  /// mean. In hard mode the length gradient is projected out in the same
  /// metric.
  Vec descent_direction(const Network &net, const Evaluation &ev) const {
    const auto d = static_cast<std::size_t>(net.dim());
    const std::size_t nv = net.vertex_count();
    Vec g(nv * d, 0.0), lg(nv * d, 0.0), hess(nv, 0.0);
    for (std::size_t i = 0; i < mu_.size(); ++i) {
      const double r = ev.table.distance[i];
      if (r == 0.0 && cfg_.p < 2.0) continue;
      const double coef = mu_.weight(i) * cfg_.p * (cfg_.p == 2.0 ? 1.0 : pow0(r, cfg_.p - 2.0));
      auto x = mu_.point(i);
      auto f = ev.table.foot(i);
      const int e = ev.table.edge[i];
      std::size_t a = 0, b = 0;
      double t = 0.0;
      if (e >= 0) {
        a = static_cast<std::size_t>(net.edge(static_cast<std::size_t>(e))[0]);
        b = static_cast<std::size_t>(net.edge(static_cast<std::size_t>(e))[1]);
        t = ev.table.t[i];
      }
      hess[a] += (1.0 - t) * coef;
      hess[b] += t * coef;
      for (std::size_t c = 0; c < d; ++c) {
        const double u = coef * (x[c] - f[c]);
        g[a * d + c] -= (1.0 - t) * u;
        g[b * d + c] -= t * u;
      }
    }
    const double mean_h = std::accumulate(hess.begin(), hess.end(), 0.0) / static_cast<double>(nv);
    for (auto &h : hess) h += 1.0 * mean_h + 1e-300;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      const auto a = static_cast<std::size_t>(net.edge(e)[0]), b = static_cast<std::size_t>(net.edge(e)[1]);
      const double len = net.edge_length(e);
      for (std::size_t c = 0; c < d; ++c) {
        const double u = (net.vertex(a)[c] - net.vertex(b)[c]) / len;
        lg[a * d + c] += u;
        lg[b * d + c] -= u;
      }
    }
    // Diagonal of the length Hessian, scaled by the multiplier below.
    Vec curv(nv, 0.0);
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      const double k = 1.0 / net.edge_length(e);
      curv[static_cast<std::size_t>(net.edge(e)[0])] += k;
      curv[static_cast<std::size_t>(net.edge(e)[1])] += k;
    }
    const Vec base_hess = hess;
    double mult = cfg_.lambda;
    for (int pass = 0; pass < 3; ++pass) {
      for (std::size_t v = 0; v < nv; ++v) hess[v] = base_hess[v] + std::abs(mult) * curv[v];
      if (cfg_.mode == SolveMode::soft) break;
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        num += lg[k] * g[k] / hess[k / d];
        den += lg[k] * lg[k] / hess[k / d];
      }
      mult = den > 0.0 ? -num / den : 0.0;
    }
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = -(g[k] + mult * lg[k]) / hess[k / d];
    return g;
  }

  double gradient_step(Network &net, Evaluation &cur, double factor) const {
    if (net.edge_count() == 0) return factor;
    const Vec dir = descent_direction(net, cur);
    const auto d = static_cast<std::size_t>(net.dim());
    double big = 0.0;
    for (std::size_t v = 0; v < net.vertex_count(); ++v) big = std::max(big, norm({dir.data() + v * d, d}));
    if (!(big > 0.0)) return factor;
    const double base = std::min(1.0, max_edge_ / big);
    double f = factor;
    for (int k = 0; k <= 20; ++k, f *= 0.5) {
      Vec coords = net.coords();
      for (std::size_t j = 0; j < coords.size(); ++j) coords[j] += f * base * dir[j];
      std::optional<Network> trial;
      try {
        trial = net.with_coords(std::move(coords));
        if (cfg_.mode == SolveMode::hard && total_length(*trial) > cfg_.length)
          trial = enforce_length(*trial, cfg_.length, centroid_of(*trial));
      } catch (const DegenerateGeometryError &) {
        continue;
      }
      Evaluation ev = evaluate(*trial);
      if (ev.objective < cur.objective) {
        net = std::move(*trial);
        cur = std::move(ev);
        return std::min(2.0 * f, 8.0);
      }
    }
    return std::max(f, 1e-6);
  }

  double translate_step(Network &net, Evaluation &cur, double s0) const {
    const Vec dir = foot_net(cur);
    if (norm(dir) == 0.0) return s0;
    double s = s0;
    for (int k = 0; k <= 8; ++k, s *= 0.5) {
      Vec shift(dir);
      for (auto &v : shift) v *= s;
      Network trial = translate(net, shift);
      Evaluation ev = evaluate(trial);
      if (ev.objective < cur.objective) {
        net = std::move(trial);
        cur = std::move(ev);
        return s0;
      }
    }
    return s0;
  }

  /// (1 - eps) scaling about the pushforward centroid, soft mode only.
  /// Tries eps0, eps0/2, ... (at most `halvings` times); returns the accepted
  /// eps or 0.
  double scaling_step(Network &net, Evaluation &cur, double eps0, int halvings) const {
    if (net.edge_count() == 0) return 0.0;
    const Vec ctr = centroid_of(net);
    double eps = eps0;
    for (int k = 0; k <= halvings; ++k, eps *= 0.5) {
      Network trial = shrink(net, eps, ctr);
      Evaluation ev = evaluate(trial);
      if (ev.objective < cur.objective) {
        net = std::move(trial);
        cur = std::move(ev);
        return eps;
      }
    }
    return 0.0;
  }

  void maintain(Network &net, Evaluation &cur, SolveResult &res, int it) const {
    // Pruning, merging, degree splits and refinement: accepted when the
    // objective rises by at most grad_tol.
    {
      const auto sampled = subdivide(net, h_);
      const auto pf = pushforward(cur.table, sampled, mu_);
      Network next = prune(net, sampled, pf);
      next = simplify(next, min_edge_);
      next = split_high_degree(next, cur, res, it);
      next = refine(next, max_edge_);
      Evaluation ev = evaluate(next);
      if (ev.objective <= cur.objective + cfg_.grad_tol) {
        net = std::move(next);
        cur = std::move(ev);
      }
    }
    // Coarsening and atom grafts change the shape; each is followed by a few
    // descent steps and kept only if the objective ends up lower.
    auto try_move = [&](Network cand) {
      Evaluation ev = evaluate(cand);
      double f = 1.0;
      for (int k = 0; k < 5; ++k) f = gradient_step(cand, ev, f);
      if (ev.objective < cur.objective) {
        net = std::move(cand);
        cur = std::move(ev);
        return true;
      }
      return false;
    };
    if (auto c = coarsen(net)) try_move(std::move(*c));
    if (cfg_.mode == SolveMode::hard && atom_threshold_ > 0.0) {
      Network g = graft_at_atom(net, res, it);
      if (g.vertex_count() != net.vertex_count()) try_move(std::move(g));
    }
  }

  /// Removes degree-2 vertices whose two edges together are shorter than half
  /// the target edge length. Returns nothing when no vertex qualifies.
  std::optional<Network> coarsen(const Network &net) const {
    const auto adj = net.adjacency();
    const std::size_t nv = net.vertex_count();
    std::vector<char> removed(nv, 0), locked(nv, 0);
    std::vector<std::pair<int, int>> bypass;
    for (std::size_t v = 0; v < nv; ++v) {
      if (adj[v].size() != 2 || locked[v]) continue;
      const auto a = static_cast<std::size_t>(adj[v][0]), b = static_cast<std::size_t>(adj[v][1]);
      if (locked[a] || locked[b] || removed[a] || removed[b]) continue;
      const double len = dist(net.vertex(v), net.vertex(a)) + dist(net.vertex(v), net.vertex(b));
      if (len >= 0.5 * max_edge_) continue;
      if (std::find(adj[a].begin(), adj[a].end(), static_cast<int>(b)) != adj[a].end()) continue;
      removed[v] = 1;
      locked[a] = locked[b] = 1;
      bypass.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    if (bypass.empty()) return std::nullopt;
    std::vector<int> id(nv, -1);
    Vec coords;
    int next = 0;
    for (std::size_t v = 0; v < nv; ++v) {
      if (removed[v]) continue;
      id[v] = next++;
      auto x = net.vertex(v);
      coords.insert(coords.end(), x.begin(), x.end());
    }
    std::vector<Edge> edges;
    for (const auto &[a, b] : net.edges())
      if (!removed[static_cast<std::size_t>(a)] && !removed[static_cast<std::size_t>(b)])
        edges.push_back({id[static_cast<std::size_t>(a)], id[static_cast<std::size_t>(b)]});
    for (const auto &[a, b] : bypass) edges.push_back({id[static_cast<std::size_t>(a)], id[static_cast<std::size_t>(b)]});
    try {
      return Network(net.dim(), std::move(coords), std::move(edges));
    } catch (const Error &) {
      return std::nullopt;
    }
  }

  /// Removes leaf edges, and cycle edges whose removal keeps the network
  /// connected, when they carry no more than prune_mass_tol of pushforward
  /// mass (endpoint nodes included).
  Network prune(const Network &net, const SampledNetwork &sampled, const PushforwardMeasure &pf) const {
    if (net.edge_count() <= 1) return net;
    const auto deg = net.degrees();
    std::vector<char> remove_edge(net.edge_count(), 0), remove_vertex(net.vertex_count(), 0);
    std::vector<std::size_t> cycle_candidates;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      double mass = 0.0;
      for (int id : sampled.edge_nodes[e]) mass += pf.node_mass[static_cast<std::size_t>(id)];
      if (mass > cfg_.topology.prune_mass_tol) continue;
      const auto [a, b] = net.edge(e);
      const bool leaf_a = deg[static_cast<std::size_t>(a)] == 1, leaf_b = deg[static_cast<std::size_t>(b)] == 1;
      if (leaf_a && leaf_b) continue;
      if (!leaf_a && !leaf_b) {
        cycle_candidates.push_back(e);
        continue;
      }
      remove_edge[e] = 1;
      remove_vertex[static_cast<std::size_t>(leaf_a ? a : b)] = 1;
    }
    Network out = rebuild(net, remove_edge, remove_vertex);
    if (cycle_candidates.empty() || topology_report(out).cycle_rank == 0) return out;
    // Vertex ids are unchanged when no leaf was removed; otherwise leave the
    // cycle edges for the next maintenance pass.
    if (out.vertex_count() != net.vertex_count()) return out;
    std::vector<char> drop(net.edge_count(), 0);
    const std::vector<char> none(net.vertex_count(), 0);
    for (std::size_t e : cycle_candidates) {
      drop[e] = 1;
      if (!rebuild_ok(net, drop, none)) drop[e] = 0;
    }
    return rebuild(net, drop, none);
  }

  static bool rebuild_ok(const Network &net, const std::vector<char> &remove_edge,
                         const std::vector<char> &remove_vertex) {
    try {
      build_without(net, remove_edge, remove_vertex);
      return true;
    } catch (const Error &) {
      return false;
    }
  }

  static Network rebuild(const Network &net, const std::vector<char> &remove_edge,
                         const std::vector<char> &remove_vertex) {
    try {
      return build_without(net, remove_edge, remove_vertex);
    } catch (const Error &) {
      return net;
    }
  }

  static Network build_without(const Network &net, const std::vector<char> &remove_edge,
                               const std::vector<char> &remove_vertex) {
    std::vector<int> id(net.vertex_count(), -1);
    Vec coords;
    int next = 0;
    for (std::size_t v = 0; v < net.vertex_count(); ++v) {
      if (remove_vertex[v]) continue;
      id[v] = next++;
      auto x = net.vertex(v);
      coords.insert(coords.end(), x.begin(), x.end());
    }
    std::vector<Edge> edges;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      if (remove_edge[e]) continue;
      const auto [a, b] = net.edge(e);
      edges.push_back({id[static_cast<std::size_t>(a)], id[static_cast<std::size_t>(b)]});
    }
    return Network(net.dim(), std::move(coords), std::move(edges));
  }

  /// Splits vertices of degree >= 4 into triple junctions.
  Network split_high_degree(Network net, const Evaluation &cur, SolveResult &res, int it) const {
    const auto d = static_cast<std::size_t>(net.dim());
    for (int guard = 0; guard < 64; ++guard) {
      const auto deg = net.degrees();
      std::size_t v = net.vertex_count();
      for (std::size_t u = 0; u < net.vertex_count(); ++u)
        if (deg[u] >= 4) {
          v = u;
          break;
        }
      if (v == net.vertex_count()) return net;
      // Pair of incident edges with the smallest angle moves to a new vertex.
      std::vector<std::size_t> inc;
      for (std::size_t e = 0; e < net.edge_count(); ++e)
        if (net.edge(e)[0] == static_cast<int>(v) || net.edge(e)[1] == static_cast<int>(v)) inc.push_back(e);
      auto other = [&](std::size_t e) {
        return static_cast<std::size_t>(net.edge(e)[0] == static_cast<int>(v) ? net.edge(e)[1] : net.edge(e)[0]);
      };
      auto unit = [&](std::size_t e) {
        Vec u = sub(net.vertex(other(e)), net.vertex(v));
        const double len = norm(u);
        for (auto &c : u) c /= len;
        return u;
      };
      double best = -2.0;
      std::size_t e1 = 0, e2 = 0;
      for (std::size_t i = 0; i < inc.size(); ++i)
        for (std::size_t j = i + 1; j < inc.size(); ++j) {
          const double cosang = dot(unit(inc[i]), unit(inc[j]));
          if (cosang > best) {
            best = cosang;
            e1 = inc[i];
            e2 = inc[j];
          }
        }
      Vec dir = unit(e1);
      const Vec u2 = unit(e2);
      for (std::size_t c = 0; c < d; ++c) dir[c] += u2[c];
      double len = norm(dir);
      if (len < 1e-12) {
        dir = unit(e1);
        len = 1.0;
      }
      const double sep = std::min(
          {std::max(1.01 * min_edge_, 0.25 * max_edge_), 0.5 * net.edge_length(e1), 0.5 * net.edge_length(e2)});
      Vec coords = net.coords();
      for (std::size_t c = 0; c < d; ++c) coords.push_back(net.vertex(v)[c] + sep * dir[c] / len);
      const int nv = static_cast<int>(net.vertex_count());
      std::vector<Edge> edges = net.edges();
      edges[e1] = {nv, static_cast<int>(other(e1))};
      edges[e2] = {nv, static_cast<int>(other(e2))};
      edges.push_back({static_cast<int>(v), nv});
      Network trial;
      try {
        trial = Network(net.dim(), std::move(coords), std::move(edges));
      } catch (const Error &) {
        note(res, "iteration " + std::to_string(it) + ": degree split skipped (degenerate)");
        return net;
      }
      if (cfg_.mode == SolveMode::hard) trial = enforce_length(trial, cfg_.length, net.vertex(v));
      const Evaluation ev = evaluate(trial);
      if (ev.objective > cur.objective + cfg_.grad_tol) {
        note(res, "iteration " + std::to_string(it) + ": degree split skipped (objective would rise)");
        return net;
      }
      net = std::move(trial);
    }
    return net;
  }

  /// Grows a short segment at the endpoint whose barycentre vector is
  /// largest, when there is slack in the budget.
  Network graft_at_atom(const Network &net, SolveResult &res, int it) const {
    const double slack = cfg_.length - total_length(net);
    if (slack < atom_threshold_ || net.edge_count() == 0) return net;
    const auto tab = project(mu_, net, popt_);
    const auto sampled = subdivide(net, h_);
    const auto pf = pushforward(tab, sampled, mu_);
    const auto field = barycentre_field(mu_, tab, pf, sampled, cfg_.p, M_);
    const auto deg = net.degrees();
    std::size_t best = net.vertex_count();
    for (std::size_t v = 0; v < net.vertex_count(); ++v)
      if (deg[v] == 1 && (best == net.vertex_count() || field.norm_at(v) > field.norm_at(best))) best = v;
    if (best == net.vertex_count() || field.norm_at(best) == 0.0) return net;
    const double len = std::min(slack, max_edge_);
    const auto d = static_cast<std::size_t>(net.dim());
    Vec coords = net.coords();
    const double bn = field.norm_at(best);
    for (std::size_t c = 0; c < d; ++c) coords.push_back(net.vertex(best)[c] + len * field.at(best)[c] / bn);
    std::vector<Edge> edges = net.edges();
    edges.push_back({static_cast<int>(best), static_cast<int>(net.vertex_count())});
    try {
      Network out(net.dim(), std::move(coords), std::move(edges));
      (void)res;
      (void)it;
      return out;
    } catch (const Error &) {
      return net;
    }
  }

  /// Final stationarity sweeps: translation always, scaling in soft mode.
  void polish(Network &net, Evaluation &cur) const {
    double s = 1.0 / cfg_.p;
    for (int k = 0; k < 200; ++k) {
      const double before = cur.objective;
      s = translate_step(net, cur, s);
      bool scaled = false;
      if (cfg_.mode == SolveMode::soft) scaled = scaling_step(net, cur, 0.5, 30) > 0.0;
      if (!scaled && !(cur.objective < before)) break;
    }
  }

  static void note(SolveResult &res, std::string msg) {
    if (res.diagnostics.size() < 200) res.diagnostics.push_back(std::move(msg));
  }

  const DiscreteMeasure &mu_;
  SolverConfig cfg_;
  double M_ = 0.0, h_ = 0.0, min_edge_ = 0.0, max_edge_ = 0.0, bandwidth_ = 0.0, atom_threshold_ = 0.0;
  ProjectionOptions popt_;
};

}  // namespace detail

inline SolveResult solve(const DiscreteMeasure &measure, const SolverConfig &config,
                         std::optional<Network> init = std::nullopt) {
  detail::Solver s(measure, config);
  return s.run(std::move(init));
}

/// Field, sampling and mollified field for a given network, as the solver
/// would report them; the network is not moved.
inline SolveResult describe(const DiscreteMeasure &measure, const Network &net, const SolverConfig &config) {
  if (net.dim() != measure.dim()) throw ValidationError("network dimension does not match the measure");
  detail::Solver s(measure, config);
  return s.describe(net);
}

// ---------------------------------------------------------------------------
// Budget sweep

struct SweepResult {
  Vec lengths, j, quotients;
  std::vector<SolveResult> results;
};

inline SweepResult sweep(const DiscreteMeasure &measure, double p, const Vec &lengths, SolverConfig config,
                         bool warm_start = true) {
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (!(lengths[k] >= 0.0)) throw ValidationError("sweep lengths must be nonnegative");
    if (k > 0 && !(lengths[k] > lengths[k - 1])) throw ValidationError("sweep lengths must be strictly increasing");
  }
  config.p = p;
  config.mode = SolveMode::hard;
  SweepResult out;
  std::optional<Network> prev;
  for (double l : lengths) {
    config.length = l;
    SolveResult r = solve(measure, config, warm_start ? prev : std::nullopt);
    out.lengths.push_back(l);
    out.j.push_back(r.j_value);
    prev = r.network;
    out.results.push_back(std::move(r));
  }
  for (std::size_t k = 0; k + 1 < out.j.size(); ++k)
    out.quotients.push_back((out.j[k + 1] - out.j[k]) / (out.lengths[k + 1] - out.lengths[k]));
  return out;
}

}  // namespace adpnet
