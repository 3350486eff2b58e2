#pragma once

#include "solver.hpp"

namespace adpnet {

struct AtomCheck {
  int vertex = -1;
  double mass = 0.0;   // nu over the 2h ball around the endpoint
  double b_norm = 0.0; // |B| at the endpoint node
  double lhs = 0.0, rhs = 0.0;
  double rhs_min_lambda = 0.0;  // same bound with min{1/L, 1/max|xi|}
  bool pass = false;
};

struct DiagnosticsReport {
  double net_field_norm = 0.0;
  double net_field_tol = 0.0;
  long hull_violations = 0;
  double hull_tol = 0.0;
  double ambiguous_mass = 0.0;
  TopologyReport topology;
  double lambda = 0.0;  // max{1/L, 1/max|xi|} of the final mollified field
  double lambda_min = 0.0;
  double length = 0.0;  // l in the atom bound
  std::vector<AtomCheck> atom_checks;
  long power_bound_failures = 0;
  double fd_gap = 0.0;
  bool fd_available = false;

  bool atoms_pass() const {
    return std::all_of(atom_checks.begin(), atom_checks.end(), [](const AtomCheck &a) { return a.pass; });
  }
  bool stationary() const { return net_field_norm <= net_field_tol; }
  bool ok() const {
    return stationary() && hull_violations == 0 && ambiguous_mass <= 0.02 && topology.cycle_rank == 0 &&
           topology.max_degree <= 3 && atoms_pass() && power_bound_failures == 0;
  }
};

/// Minimizer checks on a solver output. Pure: nothing in `result` changes.
inline DiagnosticsReport check_minimizer(const DiscreteMeasure &measure, const SolveResult &result,
                                         const SolverConfig &config) {
  DiagnosticsReport r;
  const auto hull = hull_summary(measure);
  const double M = hull.diameter > 0.0 ? hull.diameter : 1.0;
  const Network &net = result.network;
  const double p = config.p;

  ProjectionOptions popt;
  popt.scale = M;
  const auto tab = project(measure, net, popt);
  const auto &sampled = result.sampled;
  const auto pf = pushforward(tab, sampled, measure);
  const auto field = barycentre_field(measure, tab, pf, sampled, p, M);

  r.net_field_norm = norm(field.net);
  r.net_field_tol = 1e-3 * p * std::pow(M, p - 1.0);
  r.hull_tol = 1e-9 * M;
  for (std::size_t v = 0; v < net.vertex_count(); ++v)
    if (!hull.contains(net.vertex(v), r.hull_tol)) ++r.hull_violations;
  r.ambiguous_mass = ambiguous_mass(tab, measure);
  r.topology = topology_report(net);

  r.length = config.mode == SolveMode::hard ? config.length : total_length(net);
  if (result.xi && r.length > 0.0) {
    r.lambda = result.xi->lambda();
    const double a = result.xi->lip_estimate > 0.0 ? 1.0 / result.xi->lip_estimate : 0.0;
    const double b = result.xi->sup_norm > 0.0 ? 1.0 / result.xi->sup_norm : 0.0;
    r.lambda_min = (a > 0.0 && b > 0.0) ? std::min(a, b) : std::max(a, b);
    const double two_h = 2.0 * result.h;
    for (int v : r.topology.endpoint_vertex_ids) {
      AtomCheck a;
      a.vertex = v;
      const auto centre = sampled.position(static_cast<std::size_t>(v));
      for (std::size_t k = 0; k < sampled.size(); ++k)
        if (dist(sampled.position(k), centre) <= two_h) a.mass += pf.node_mass[k];
      a.b_norm = field.norm_at(static_cast<std::size_t>(v));
      a.lhs = a.mass * a.b_norm;
      a.rhs = r.lambda / (4.0 * r.length) * field.l2sq;
      a.rhs_min_lambda = r.lambda_min / (4.0 * r.length) * field.l2sq;
      a.pass = a.lhs >= a.rhs;
      r.atom_checks.push_back(a);
    }

    if (result.xi->size() == sampled.size() && net.edge_count() > 0) {
      const auto fd = fd_check(measure, sampled, *result.xi, p, {1e-2, 1e-3, 1e-4}, M);
      r.power_bound_failures = fd.power_bound_failures;
      r.fd_gap = std::abs(fd.gaps.back());
      r.fd_available = true;
    }
  }
  return r;
}

struct SoftReport {
  bool applicable = false;
  double scaling_quotient = 0.0;
  double tol = 1e-6;
  bool nontrivial_field = false;
  double b_l2sq = 0.0;
  bool scaling_ok() const { return scaling_quotient >= -tol; }
};

/// One-sided quotient of eps -> J_p((1-eps)Sigma) + lambda (1-eps) H1 at
/// eps = 0+, scaling about the nu-weighted centroid.
inline SoftReport check_soft(const DiscreteMeasure &measure, const SolveResult &result, double lambda, double p,
                             double grad_tol = 1e-9, double eps = 1e-6) {
  if (!(lambda > 0.0)) throw ValidationError("soft penalty lambda must be positive");
  SoftReport r;
  const Network &net = result.network;
  const double len = total_length(net);
  r.b_l2sq = result.field.l2sq;
  r.nontrivial_field = r.b_l2sq > grad_tol;
  if (len == 0.0) return r;
  r.applicable = true;
  ProjectionOptions popt;
  popt.scale = result.scale > 0.0 ? result.scale : hull_summary(measure).diameter;
  const auto tab = project(measure, net, popt);
  const auto pf = pushforward(tab, result.sampled, measure);
  const auto d = static_cast<std::size_t>(net.dim());
  Vec ctr(d, 0.0);
  for (std::size_t k = 0; k < result.sampled.size(); ++k)
    for (std::size_t c = 0; c < d; ++c) ctr[c] += pf.node_mass[k] * result.sampled.position(k)[c];
  const double f0 = j_p(measure, tab, p) + lambda * len;
  const Network moved = shrink(net, eps, ctr);
  const double f1 = j_p(measure, project(measure, moved, popt), p) + lambda * total_length(moved);
  r.scaling_quotient = (f1 - f0) / eps;
  return r;
}

struct RegimeInfo {
  bool covered = false;
  double threshold = 0.0;
};

/// Exponents for which the tree/triple-junction characterization is proved:
/// p = 2 or p above the larger root of t^2 - 3t + 1.
inline RegimeInfo regime_table(double p) {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  RegimeInfo r;
  r.threshold = 0.5 * (3.0 + std::sqrt(5.0));
  r.covered = p == 2.0 || p > r.threshold;
  return r;
}

}  // namespace adpnet
