#pragma once

#include <functional>

#include "projection.hpp"

namespace adpnet {

inline double dist_pow(double r, double p) {
  if (p == 2.0) return r * r;
  if (p == 1.0) return r;
  return pow0(r, p);
}

/// Sum of w_i * dist_i^p.
inline double j_p(const DiscreteMeasure &measure, const ProjectionTable &tab, double p) {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  if (tab.size() != measure.size()) throw ValidationError("projection table does not match measure");
  double s = 0.0;
  for (std::size_t i = 0; i < tab.size(); ++i) s += measure.weight(i) * dist_pow(tab.distance[i], p);
  return s;
}

/// j_p plus lambda times network length.
inline double j_soft(const DiscreteMeasure &measure, const ProjectionTable &tab, const Network &net, double p,
                     double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("soft penalty lambda must be positive");
  return j_p(measure, tab, p) + lambda * total_length(net);
}

// ---------------------------------------------------------------------------
// Barycentre field

/// Per-node barycentre vectors B with pushforward masses.
struct BarycentreField {
  int dim = 0;
  double p = 2.0;
  Vec b;     // row-major, one d-vector per node
  Vec mass;  // pushforward mass per node
  Vec net;   // sum of B * mass
  double l2sq = 0.0;
  std::vector<std::size_t> excluded;  // points dropped as coincident with their node (p < 2)

  std::size_t size() const { return mass.size(); }
  ConstPoint at(std::size_t k) const {
    return {b.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double norm_at(std::size_t k) const { return norm(at(k)); }
};

/// B(s) = (p / nu(s)) * sum over the fiber of w_i |x_i - s|^{p-2} (x_i - s),
/// with s the node position; nodes without mass carry B = 0.
inline BarycentreField barycentre_field(const DiscreteMeasure &measure, const ProjectionTable &tab,
                                        const PushforwardMeasure &pf, const SampledNetwork &sampled, double p,
                                        double scale = 0.0) {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  if (pf.size() != sampled.size()) throw ValidationError("pushforward does not match sampled network");
  const auto d = static_cast<std::size_t>(measure.dim());
  BarycentreField f;
  f.dim = measure.dim();
  f.p = p;
  f.b.assign(sampled.size() * d, 0.0);
  f.mass = pf.node_mass;
  f.net.assign(d, 0.0);

  double coincide = 0.0;
  if (p < 2.0) {
    for (std::size_t i = 0; i < tab.size(); ++i)
      if (tab.distance[i] == 0.0) throw SingularIntegrandError(i);
    if (scale <= 0.0) scale = hull_summary(measure).diameter;
    coincide = 1e-12 * scale;
  }

  for (std::size_t k = 0; k < sampled.size(); ++k) {
    const double nu = pf.node_mass[k];
    if (!(nu > 0.0)) continue;
    auto s = sampled.position(k);
    double *bk = f.b.data() + k * d;
    for (int idx : pf.fiber[k]) {
      const auto i = static_cast<std::size_t>(idx);
      auto x = measure.point(i);
      const double r = dist(x, s);
      if (p < 2.0 && r < coincide) {
        f.excluded.push_back(i);
        continue;
      }
      const double w = measure.weight(i) * (p == 2.0 ? 1.0 : pow0(r, p - 2.0));
      for (std::size_t c = 0; c < d; ++c) bk[c] += w * (x[c] - s[c]);
    }
    for (std::size_t c = 0; c < d; ++c) {
      bk[c] *= p / nu;
      f.net[c] += bk[c] * nu;
    }
    f.l2sq += norm_sq({bk, d}) * nu;
  }
  std::sort(f.excluded.begin(), f.excluded.end());
  return f;
}

/// Integral of B against nu.
inline Vec net_field(const BarycentreField &field) { return field.net; }

// ---------------------------------------------------------------------------
// Lipschitz approximation

struct LipschitzField {
  int dim = 0;
  Vec xi;  // row-major per node
  double lip_estimate = 0.0;
  double sup_norm = 0.0;
  double pairing = 0.0;  // <xi, B> in L2(nu)
  double bandwidth = 0.0;
  int halvings = 0;

  std::size_t size() const { return dim ? xi.size() / static_cast<std::size_t>(dim) : 0; }
  ConstPoint at(std::size_t k) const {
    return {xi.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  /// max{1/L, 1/max|xi|}, the scale used by the endpoint mass bound.
  double lambda() const {
    const double a = lip_estimate > 0.0 ? 1.0 / lip_estimate : 0.0;
    const double b = sup_norm > 0.0 ? 1.0 / sup_norm : 0.0;
    return std::max(a, b);
  }
};

inline double pairing(const LipschitzField &xi, const BarycentreField &field) {
  if (xi.size() != field.size() || xi.dim != field.dim)
    throw ValidationError("fields live on different node sets");
  double s = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k)
    if (field.mass[k] > 0.0) s += dot(xi.at(k), field.at(k)) * field.mass[k];
  return s;
}

namespace detail {

inline void finish_lipschitz(LipschitzField &out, const SampledNetwork &sampled) {
  const std::size_t n = out.size();
  out.sup_norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) out.sup_norm = std::max(out.sup_norm, norm(out.at(k)));
  double lip = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double r = dist(sampled.position(a), sampled.position(b));
      if (r > 0.0) lip = std::max(lip, dist(out.at(a), out.at(b)) / r);
    }
  out.lip_estimate = lip;
}

}  // namespace detail

/// Gaussian-kernel average of B weighted by nu. The bandwidth is halved until
/// <xi, B> > l2sq / 2, at most 40 times.
inline LipschitzField mollify(const BarycentreField &field, const SampledNetwork &sampled, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("mollification bandwidth must be positive");
  if (!(field.l2sq > 0.0)) throw ValidationError("cannot mollify a trivial barycentre field");
  if (field.size() != sampled.size()) throw ValidationError("field does not match sampled network");
  const auto d = static_cast<std::size_t>(field.dim);
  std::vector<std::size_t> massive;
  for (std::size_t k = 0; k < field.size(); ++k)
    if (field.mass[k] > 0.0) massive.push_back(k);

  LipschitzField out;
  out.dim = field.dim;
  std::vector<double> r2(massive.size());
  for (int halving = 0; halving <= 40; ++halving, bandwidth *= 0.5) {
    out.xi.assign(field.size() * d, 0.0);
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    for (std::size_t k = 0; k < field.size(); ++k) {
      double rmin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < massive.size(); ++j) {
        r2[j] = dist_sq(sampled.position(k), sampled.position(massive[j]));
        rmin = std::min(rmin, r2[j]);
      }
      // Shifted exponent keeps the nearest massive node at weight 1.
      double denom = 0.0;
      double *xk = out.xi.data() + k * d;
      for (std::size_t j = 0; j < massive.size(); ++j) {
        const double w = std::exp(-(r2[j] - rmin) * inv) * field.mass[massive[j]];
        if (w == 0.0) continue;
        denom += w;
        auto bj = field.at(massive[j]);
        for (std::size_t c = 0; c < d; ++c) xk[c] += w * bj[c];
      }
      for (std::size_t c = 0; c < d; ++c) xk[c] /= denom;
    }
    out.pairing = pairing(out, field);
    if (out.pairing > 0.5 * field.l2sq) {
      out.bandwidth = bandwidth;
      out.halvings = halving;
      detail::finish_lipschitz(out, sampled);
      return out;
    }
  }
  throw MollificationError("mollification failed after 40 bandwidth halvings");
}

/// Field given by a function of node position, e.g. a prescribed test
/// deformation. `lip` is the known Lipschitz constant; a negative value
/// estimates it over all node pairs.
inline LipschitzField lipschitz_field_from(const SampledNetwork &sampled, const std::function<Vec(ConstPoint)> &fn,
                                           double lip = -1.0, const BarycentreField *field = nullptr) {
  LipschitzField out;
  out.dim = sampled.base.dim();
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    Vec v = fn(sampled.position(k));
    if (v.size() != static_cast<std::size_t>(out.dim)) throw ValidationError("field function has wrong dimension");
    out.xi.insert(out.xi.end(), v.begin(), v.end());
  }
  if (lip < 0.0) {
    detail::finish_lipschitz(out, sampled);
  } else {
    out.lip_estimate = lip;
    for (std::size_t k = 0; k < out.size(); ++k) out.sup_norm = std::max(out.sup_norm, norm(out.at(k)));
  }
  if (field) out.pairing = pairing(out, *field);
  return out;
}

/// -<xi, B> in L2(nu): the predicted first-order change of J_p along xi.
inline double first_variation(const BarycentreField &field, const LipschitzField &xi) {
  return -pairing(xi, field);
}

}  // namespace adpnet
