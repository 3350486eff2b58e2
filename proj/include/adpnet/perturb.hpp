#pragma once

#include "functional.hpp"
#include "inequality.hpp"

namespace adpnet {

/// Moves vertex i to v_i + eps * xi(v_i); xi is read at the vertex nodes of
/// the sampled network it was built on.
inline Network deform(const Network &net, const LipschitzField &xi, double eps) {
  if (eps < 0.0) throw ValidationError("deformation step must be nonnegative");
  if (xi.dim != net.dim() || xi.size() < net.vertex_count())
    throw ValidationError("deformation field is not defined on every vertex");
  Vec coords = net.coords();
  for (std::size_t k = 0; k < coords.size(); ++k) coords[k] += eps * xi.xi[k];
  return net.with_coords(std::move(coords));
}

/// Homothety center + (1 - eps)(v - center).
inline Network shrink(const Network &net, double eps, ConstPoint center) {
  if (eps < 0.0 || eps >= 1.0) throw ValidationError("shrink factor must lie in [0, 1)");
  const auto d = static_cast<std::size_t>(net.dim());
  Vec coords = net.coords();
  for (std::size_t v = 0; v < net.vertex_count(); ++v)
    for (std::size_t c = 0; c < d; ++c) coords[v * d + c] = center[c] + (1.0 - eps) * (coords[v * d + c] - center[c]);
  return net.with_coords(std::move(coords));
}

/// Axis cross through the origin: 2d arms of length tau joined at vertex 0.
inline Network cross(double tau, int d) {
  if (!(tau > 0.0)) throw ValidationError("cross arm length must be positive");
  if (d < 2) throw ValidationError("cross needs d >= 2");
  const auto ud = static_cast<std::size_t>(d);
  Vec coords(ud, 0.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < ud; ++i)
    for (double sgn : {1.0, -1.0}) {
      Vec v(ud, 0.0);
      v[i] = sgn * tau;
      coords.insert(coords.end(), v.begin(), v.end());
      edges.push_back({0, static_cast<int>(coords.size() / ud - 1)});
    }
  return Network(d, std::move(coords), std::move(edges));
}

/// Squared distance from x to the origin-centred cross of arm length tau:
/// |x|^2 + ((|x|_inf - tau)_+)^2 - |x|_inf^2.
inline double cross_dist_sq(ConstPoint x, double tau) {
  if (!(tau > 0.0)) throw ValidationError("cross arm length must be positive");
  const double inf = norm_inf(x);
  const double over = std::max(inf - tau, 0.0);
  return std::max(0.0, norm_sq(x) + over * over - inf * inf);
}

// ---------------------------------------------------------------------------
// Competitor (1 - eps) Sigma union cross

struct CompetitorSpec {
  Vec center;
  int center_vertex = -1;
  double epsilon = 0.0;
  double alpha = 0.0;  // budget / (2d)
  double tau = 0.0;    // alpha * epsilon
  double budget = 0.0;
};

inline CompetitorSpec make_competitor_spec(const Network &net, int center_vertex, double eps, double budget) {
  if (center_vertex < 0 || static_cast<std::size_t>(center_vertex) >= net.vertex_count())
    throw ValidationError("competitor centre must be a network vertex");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("competitor eps must lie in (0, 1)");
  if (!(budget > 0.0)) throw ValidationError("competitor budget must be positive");
  CompetitorSpec s;
  auto c = net.vertex(static_cast<std::size_t>(center_vertex));
  s.center.assign(c.begin(), c.end());
  s.center_vertex = center_vertex;
  s.epsilon = eps;
  s.budget = budget;
  s.alpha = budget / (2.0 * net.dim());
  s.tau = s.alpha * eps;
  return s;
}

inline Network competitor(const Network &net, const CompetitorSpec &spec) {
  int cv = spec.center_vertex;
  if (cv < 0 || static_cast<std::size_t>(cv) >= net.vertex_count() ||
      dist(net.vertex(static_cast<std::size_t>(cv)), spec.center) != 0.0) {
    cv = -1;
    for (std::size_t v = 0; v < net.vertex_count(); ++v)
      if (dist(net.vertex(v), spec.center) == 0.0) {
        cv = static_cast<int>(v);
        break;
      }
  }
  if (cv < 0) throw ValidationError("competitor centre is not a network vertex; snap it first");
  if (total_length(net) > spec.budget * (1.0 + 1e-12) + 1e-12)
    throw ValidationError("network exceeds the competitor budget");
  if (!(spec.tau > 0.0)) throw ValidationError("competitor needs tau > 0");

  const Network shrunk = shrink(net, spec.epsilon, spec.center);
  const auto d = static_cast<std::size_t>(net.dim());
  Vec coords = shrunk.coords();
  std::vector<Edge> edges = shrunk.edges();
  for (std::size_t i = 0; i < d; ++i)
    for (double sgn : {1.0, -1.0}) {
      Vec v = spec.center;
      v[i] += sgn * spec.tau;
      coords.insert(coords.end(), v.begin(), v.end());
      edges.push_back({cv, static_cast<int>(coords.size() / d - 1)});
    }
  return Network(net.dim(), std::move(coords), std::move(edges));
}

// ---------------------------------------------------------------------------
// Lower bounds for J_p(Sigma) - J_p(Sigma*)

struct BoundOptions {
  double a_radius = 0.0;  // radius of the neighbourhood A around the centre; <= 0 uses tau
  double tol_factor = 1e-9;
  double scale = 0.0;  // M; <= 0 computes it from the hull
};

struct BoundReport {
  double p = 2.0;
  // per measure point
  Vec psi, psi1, zeta, lhs;
  // scalars
  double epsilon = 0.0, tau = 0.0, alpha = 0.0;
  double kappa = 0.0, M = 0.0, c = 0.0;
  double a_radius = 0.0, a_mass = 0.0, beta_a = 0.0;
  long violations = 0;
  double min_slack = 0.0;  // min over points of lhs - psi
  double j_sigma = 0.0, j_competitor = 0.0;
  double j_difference = 0.0;  // J_p(Sigma) - J_p(Sigma*)
  double rhs = 0.0;           // (p/2) int psi dist^{p-2} + (p/2) int psi zeta
  double chain_rhs = 0.0;     // (p/2) int psi dist(x, Sigma*)^{p-2}
  double psi_zeta_integral = 0.0;
  double psi_zeta_estimate = 0.0;  // -kappa (...) neighbourhood estimate
  bool aggregate_ok = false;
  bool chain_ok = false;
  double length_competitor = 0.0;
};

inline double kappa_p(double p, double c, double eps, double M) {
  if (p == 2.0) return 0.0;
  if (p > 2.0 && p < 3.0) return std::pow(c * eps, p - 2.0);
  if (p >= 3.0) return (p - 2.0) * c * eps * pow0(M, p - 3.0);
  throw UnsupportedError("kappa_p is defined for p >= 2 only");
}

inline double zeta_term(double p, double d, double dstar) {
  if (p == 2.0) return 0.0;
  if (p < 3.0) return -std::pow(std::abs(d - dstar), p - 2.0);
  return (p - 2.0) * (dstar - d) * pow0(d, p - 3.0);
}

inline BoundReport bound_check(const DiscreteMeasure &measure, const Network &net, const ProjectionTable &tab,
                               const CompetitorSpec &spec, double p, const BoundOptions &opt = {}) {
  if (p < 2.0) throw UnsupportedError("bound_check covers p >= 2 only");
  if (tab.size() != measure.size()) throw ValidationError("projection table does not match measure");
  const auto d = static_cast<std::size_t>(measure.dim());
  BoundReport r;
  r.p = p;
  r.epsilon = spec.epsilon;
  r.tau = spec.tau;
  r.alpha = spec.alpha;
  r.M = opt.scale > 0.0 ? opt.scale : hull_summary(measure).diameter;
  r.c = std::max(r.M, r.alpha);
  r.kappa = kappa_p(p, r.c, spec.epsilon, r.M);
  r.a_radius = opt.a_radius > 0.0 ? opt.a_radius : spec.tau;

  const Network star = competitor(net, spec);
  r.length_competitor = total_length(star);
  ProjectionOptions popt;
  popt.scale = r.M;
  const ProjectionTable tab_star = project(measure, star, popt);

  const double eps = spec.epsilon, tau = spec.tau;
  const double tol = opt.tol_factor * r.M * r.M;
  const std::size_t n = measure.size();
  r.psi.resize(n);
  r.psi1.resize(n);
  r.zeta.resize(n);
  r.lhs.resize(n);
  r.min_slack = std::numeric_limits<double>::infinity();
  Vec y(d), pi(d);
  double int_a = 0.0, int_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = measure.point(i);
    auto f = tab.foot(i);
    for (std::size_t c = 0; c < d; ++c) {
      y[c] = x[c] - spec.center[c];
      pi[c] = f[c] - spec.center[c];
    }
    double pr = 0.0;  // pi . (y - pi)
    for (std::size_t c = 0; c < d; ++c) pr += pi[c] * (y[c] - pi[c]);
    const double pi2 = norm_sq(pi);
    const double first = -2.0 * eps * pr - eps * eps * pi2;
    const double second = -2.0 * pr - pi2 + 2.0 * tau * norm_inf(y) - tau * tau;
    r.psi1[i] = std::max(first, second);
    r.psi[i] = std::min(r.psi1[i], 0.0);
    const double dd = tab.distance[i], ds = tab_star.distance[i];
    r.lhs[i] = dd * dd - ds * ds;
    r.min_slack = std::min(r.min_slack, r.lhs[i] - r.psi[i]);
    if (r.lhs[i] < r.psi[i] - tol) ++r.violations;
    r.zeta[i] = zeta_term(p, dd, ds);

    const double w = measure.weight(i);
    r.j_sigma += w * dist_pow(dd, p);
    r.j_competitor += w * dist_pow(ds, p);
    int_a += w * r.psi[i] * pow0(dd, p - 2.0);
    int_b += w * r.psi[i] * r.zeta[i];
    r.chain_rhs += w * r.psi[i] * pow0(ds, p - 2.0);
    if (dist(f, spec.center) <= r.a_radius) r.a_mass += w;
  }
  r.j_difference = r.j_sigma - r.j_competitor;
  r.rhs = 0.5 * p * (int_a + int_b);
  r.chain_rhs *= 0.5 * p;
  r.psi_zeta_integral = int_b;
  const double ptol = opt.tol_factor * pow0(r.M, p);
  r.aggregate_ok = r.j_difference >= r.rhs - ptol;
  r.chain_ok = r.j_difference >= r.chain_rhs - ptol;

  // beta_A: farthest point of Sigma inside the ball around the centre.
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto [a, b] = net.edge(e);
    auto pa = net.vertex(static_cast<std::size_t>(a)), pb = net.vertex(static_cast<std::size_t>(b));
    Vec foot(d);
    if (detail::closest_on_segment(spec.center, pa, pb, foot.data()).distance > r.a_radius) continue;
    r.beta_a = std::max(r.beta_a, std::min(r.a_radius, std::max(dist(pa, spec.center), dist(pb, spec.center))));
  }
  const double M = r.M, ba = r.beta_a;
  r.psi_zeta_estimate = -r.kappa * ((2 * ba * M + ba * ba + 2 * tau * M + tau * tau) * r.a_mass +
                                    (2 * eps * M * M + eps * eps * M * M) * (1.0 - r.a_mass));
  return r;
}

// ---------------------------------------------------------------------------
// Local-dimension probe

struct ProbeResult {
  bool in_BKs = false;
  Vec ratios;  // nu(B_r(node)) / r^s per radius
};

inline ProbeResult local_dimension_probe(const PushforwardMeasure &pf, const SampledNetwork &sampled,
                                         std::size_t node, const Vec &radii, double s, double K) {
  if (node >= sampled.size()) throw ValidationError("probe node out of range");
  if (!(s >= 0.0 && s < 1.0)) throw ValidationError("probe exponent s must lie in [0, 1)");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw ValidationError("probe radii must be positive");
    if (k > 0 && !(radii[k] < radii[k - 1])) throw ValidationError("probe radii must be decreasing");
  }
  ProbeResult out;
  double best = 0.0;
  for (double r : radii) {
    double mass = 0.0;
    for (std::size_t k = 0; k < sampled.size(); ++k)
      if (dist(sampled.position(k), sampled.position(node)) <= r) mass += pf.node_mass[k];
    const double ratio = mass / pow0(r, s);
    out.ratios.push_back(ratio);
    best = std::max(best, ratio);
  }
  out.in_BKs = best > K;
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference check of the first variation

struct FDReport {
  Vec eps, quotients, gaps, ratios;
  double first_variation = 0.0;
  double j0 = 0.0;
  double constant = 0.0;  // max gap / eps
  long power_bound_failures = 0;
  bool success = false;
};

/// Compares (J_p(deform(net, xi, eps)) - J_p(net)) / eps against the
/// first-variation prediction. Success means the gap decays like eps
/// (consecutive gap ratios within a factor two of the eps ratios), or the
/// gaps vanish.
inline FDReport fd_check(const DiscreteMeasure &measure, const SampledNetwork &sampled, const LipschitzField &xi,
                         double p, const Vec &eps_list, double scale = 0.0) {
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw ValidationError("fd_check eps must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ValidationError("fd_check eps must be decreasing");
  }
  const Network &net = sampled.base;
  ProjectionOptions popt;
  popt.scale = scale > 0.0 ? scale : hull_summary(measure).diameter;
  const auto tab = project(measure, net, popt);
  const auto pf = pushforward(tab, sampled, measure);
  const auto field = barycentre_field(measure, tab, pf, sampled, p, popt.scale);

  FDReport r;
  r.eps = eps_list;
  r.j0 = j_p(measure, tab, p);
  r.first_variation = first_variation(field, xi);
  const auto d = static_cast<std::size_t>(measure.dim());
  double max_gap = 0.0;
  for (double eps : eps_list) {
    const Network moved = deform(net, xi, eps);
    const double q = (j_p(measure, project(measure, moved, popt), p) - r.j0) / eps;
    r.quotients.push_back(q);
    r.gaps.push_back(q - r.first_variation);
    max_gap = std::max(max_gap, std::abs(q - r.first_variation));
    r.constant = std::max(r.constant, std::abs(q - r.first_variation) / eps);

    Vec moved_foot(d);
    for (std::size_t i = 0; i < measure.size(); ++i) {
      auto foot = tab.foot(i);
      auto v = xi.at(static_cast<std::size_t>(pf.node_of_point[i]));
      for (std::size_t c = 0; c < d; ++c) moved_foot[c] = foot[c] + eps * v[c];
      const double a = dist(measure.point(i), moved_foot), b = tab.distance[i];
      if (!power_bounds_hold(a, b, p, 1.0)) ++r.power_bound_failures;
    }
  }
  bool decays = eps_list.size() >= 2;
  for (std::size_t k = 0; k + 1 < r.gaps.size(); ++k) {
    const double ratio = std::abs(r.gaps[k]) / std::abs(r.gaps[k + 1]);
    r.ratios.push_back(ratio);
    const double expect = eps_list[k] / eps_list[k + 1];
    if (!(ratio >= 0.5 * expect && ratio <= 2.0 * expect)) decays = false;
  }
  r.success = decays || max_gap <= 1e-12 * (1.0 + std::abs(r.first_variation));
  return r;
}

}  // namespace adpnet
