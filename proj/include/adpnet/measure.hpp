#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "core.hpp"

namespace adpnet {

/// Weighted point cloud in R^d with total mass one.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Validates and renormalizes. `coords` is row-major, `dim` values per point.
  DiscreteMeasure(int dim, Vec coords, Vec weights) : dim_(dim), coords_(std::move(coords)) {
    if (dim < 1) throw ValidationError("measure dimension must be positive");
    if (coords_.empty() || coords_.size() % static_cast<std::size_t>(dim) != 0)
      throw ValidationError("measure needs at least one point with " + std::to_string(dim) +
                            " coordinates");
    for (double c : coords_)
      if (!std::isfinite(c)) throw ValidationError("measure point coordinate is not finite");
    const std::size_t n = coords_.size() / static_cast<std::size_t>(dim);
    if (weights.empty()) weights.assign(n, 1.0);
    if (weights.size() != n) throw ValidationError("weight count does not match point count");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(weights[i]) || weights[i] < 0.0)
        throw ValidationError("negative or non-finite weight at point " + std::to_string(i));
      total += weights[i];
    }
    if (!(total > 0.0)) throw ValidationError("weights sum to zero");
    for (double &w : weights) w /= total;
    weights_ = std::move(weights);
  }

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  ConstPoint point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const Vec &weights() const { return weights_; }
  const Vec &coords() const { return coords_; }

  Vec mean() const {
    Vec m(static_cast<std::size_t>(dim_), 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      auto x = point(i);
      for (int k = 0; k < dim_; ++k) m[k] += weights_[i] * x[k];
    }
    return m;
  }

 private:
  int dim_ = 0;
  Vec coords_;
  Vec weights_;
};

// ---------------------------------------------------------------------------
// Ingestion

enum class MeasureFormat { csv, json };

namespace detail {

inline bool parse_double(const std::string &raw, double &out) {
  std::string s = raw;
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  if (s.empty()) return false;
  char *end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool blank(const std::string &line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

/// Parses CSV text. With dim == 0 the layout is inferred: a header naming a
/// "w"/"weight" column marks the weight column; otherwise two columns are
/// read as a 2-d unweighted cloud and three or more columns as d = columns - 1
/// coordinates followed by a weight.
inline DiscreteMeasure parse_measure_csv(std::istream &in, int dim = 0) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  bool header_seen = false, header_weight = false, have_data = false;
  Vec coords, weights;
  bool weighted = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    auto fields = detail::split_csv(line);
    if (!have_data && !header_seen) {
      bool any_numeric = false;
      double tmp;
      for (auto &f : fields) any_numeric |= detail::parse_double(f, tmp);
      if (!any_numeric) {
        header_seen = true;
        std::string last = fields.back();
        last.erase(std::remove_if(last.begin(), last.end(), ::isspace), last.end());
        std::transform(last.begin(), last.end(), last.begin(), ::tolower);
        header_weight = (last == "w" || last == "weight");
        continue;
      }
    }
    if (!have_data) {
      columns = fields.size();
      if (dim > 0) {
        if (columns != static_cast<std::size_t>(dim) && columns != static_cast<std::size_t>(dim) + 1)
          throw ParseError("expected " + std::to_string(dim) + " or " + std::to_string(dim + 1) +
                               " columns, found " + std::to_string(columns),
                           lineno);
        weighted = columns == static_cast<std::size_t>(dim) + 1;
      } else if (header_seen) {
        weighted = header_weight;
        dim = static_cast<int>(columns) - (weighted ? 1 : 0);
      } else {
        weighted = columns >= 3;
        dim = static_cast<int>(columns) - (weighted ? 1 : 0);
      }
      if (dim < 1) throw ParseError("too few columns", lineno);
      have_data = true;
    }
    if (fields.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns, found " +
                           std::to_string(fields.size()),
                       lineno);
    for (std::size_t c = 0; c < columns; ++c) {
      double v;
      if (!detail::parse_double(fields[c], v))
        throw ParseError("not a number: '" + fields[c] + "'", lineno);
      if (weighted && c + 1 == columns) {
        if (v < 0.0) throw ValidationError("line " + std::to_string(lineno) + ": negative weight");
        weights.push_back(v);
      } else {
        coords.push_back(v);
      }
    }
  }
  if (!have_data) throw ParseError("no data rows", lineno);
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

inline DiscreteMeasure measure_from_json(const nlohmann::json &j) {
  try {
    const int dim = j.at("dim").get<int>();
    Vec coords;
    for (const auto &p : j.at("points")) {
      if (p.size() != static_cast<std::size_t>(dim))
        throw ValidationError("point has " + std::to_string(p.size()) + " coordinates, expected " +
                              std::to_string(dim));
      for (const auto &c : p) coords.push_back(c.get<double>());
    }
    Vec weights;
    if (j.contains("weights")) weights = j.at("weights").get<Vec>();
    return DiscreteMeasure(dim, std::move(coords), std::move(weights));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("measure JSON: ") + e.what());
  }
}

inline nlohmann::json measure_to_json(const DiscreteMeasure &m) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto x = m.point(i);
    pts.push_back(Vec(x.begin(), x.end()));
  }
  return {{"dim", m.dim()}, {"points", pts}, {"weights", m.weights()}};
}

inline DiscreteMeasure load_measure(const std::string &path, MeasureFormat format, int dim = 0) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open measure file: " + path);
  if (format == MeasureFormat::csv) return parse_measure_csv(in, dim);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(e.what(), 1);
  }
  return measure_from_json(j);
}

/// Picks the format from the file extension (".json" or anything else = CSV).
inline DiscreteMeasure load_measure(const std::string &path, int dim = 0) {
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return load_measure(path, is_json ? MeasureFormat::json : MeasureFormat::csv, dim);
}

// ---------------------------------------------------------------------------
// Test densities

struct UniformBox {
  Vec lo, hi;
};
struct UniformDisk {
  Vec center;
  double radius = 1.0;
};
struct GaussianMixture {
  std::vector<Vec> means;
  Vec stddevs;
  Vec mix;  // empty = equal mixing
};
/// Uniform on a straight segment; deliberately singular w.r.t. Lebesgue.
struct SegmentDensity {
  Vec a, b;
};

using DensitySpec = std::variant<UniformBox, UniformDisk, GaussianMixture, SegmentDensity>;

inline DiscreteMeasure sample_density(const DensitySpec &spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec coords;
  int dim = 0;

  if (auto *box = std::get_if<UniformBox>(&spec)) {
    dim = static_cast<int>(box->lo.size());
    if (dim < 1 || box->hi.size() != box->lo.size())
      throw ValidationError("uniform_box needs lo/hi of equal positive dimension");
    for (int k = 0; k < dim; ++k)
      if (!(box->hi[k] > box->lo[k])) throw ValidationError("uniform_box needs hi > lo");
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k)
        coords.push_back(box->lo[k] + (box->hi[k] - box->lo[k]) * unit(rng));
  } else if (auto *disk = std::get_if<UniformDisk>(&spec)) {
    dim = static_cast<int>(disk->center.size());
    if (dim < 1 || !(disk->radius > 0.0)) throw ValidationError("uniform_disk needs radius > 0");
    Vec g(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      double len = 0.0;
      do {
        for (auto &v : g) v = gauss(rng);
        len = norm(g);
      } while (len == 0.0);
      const double r = disk->radius * std::pow(unit(rng), 1.0 / dim);
      for (int k = 0; k < dim; ++k) coords.push_back(disk->center[k] + r * g[k] / len);
    }
  } else if (auto *gm = std::get_if<GaussianMixture>(&spec)) {
    if (gm->means.empty() || gm->stddevs.size() != gm->means.size())
      throw ValidationError("gaussian_mixture needs one stddev per mean");
    dim = static_cast<int>(gm->means.front().size());
    for (std::size_t c = 0; c < gm->means.size(); ++c) {
      if (gm->means[c].size() != static_cast<std::size_t>(dim))
        throw ValidationError("gaussian_mixture means differ in dimension");
      if (!(gm->stddevs[c] > 0.0)) throw ValidationError("gaussian_mixture needs stddev > 0");
    }
    Vec mix = gm->mix.empty() ? Vec(gm->means.size(), 1.0) : gm->mix;
    if (mix.size() != gm->means.size()) throw ValidationError("gaussian_mixture mix size mismatch");
    for (double w : mix)
      if (!(w >= 0.0)) throw ValidationError("gaussian_mixture mix weights must be nonnegative");
    std::discrete_distribution<std::size_t> pick(mix.begin(), mix.end());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = pick(rng);
      for (int k = 0; k < dim; ++k) coords.push_back(gm->means[c][k] + gm->stddevs[c] * gauss(rng));
    }
  } else if (auto *seg = std::get_if<SegmentDensity>(&spec)) {
    dim = static_cast<int>(seg->a.size());
    if (dim < 1 || seg->b.size() != seg->a.size() || dist(seg->a, seg->b) == 0.0)
      throw ValidationError("segment needs two distinct endpoints of equal dimension");
    for (std::size_t i = 0; i < n; ++i) {
      const double t = unit(rng);
      for (int k = 0; k < dim; ++k) coords.push_back(seg->a[k] + t * (seg->b[k] - seg->a[k]));
    }
  }
  return DiscreteMeasure(dim, std::move(coords), Vec(n, 1.0 / static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Convex hull

struct HalfSpace {
  Vec normal;  // unit length
  double offset = 0.0;  // normal . y <= offset
};

struct HullSummary {
  double diameter = 0.0;
  std::vector<Vec> vertices;  // exact hull vertices for d <= 3, empty otherwise
  std::vector<HalfSpace> halfspaces;
  bool exact = true;  // false when the half-spaces only outer-approximate the hull

  /// Largest violation of any half-space by y (<= 0 means inside).
  double excess(ConstPoint y) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto &h : halfspaces) worst = std::max(worst, dot(h.normal, y) - h.offset);
    return halfspaces.empty() ? 0.0 : worst;
  }
  bool contains(ConstPoint y, double tol) const { return excess(y) <= tol; }
};

namespace detail {

// 2-d hull of local coordinates; returns CCW vertex indices.
inline std::vector<std::size_t> hull2d(const std::vector<std::array<double, 2>> &p, double eps) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return p[a][0] < p[b][0] || (p[a][0] == p[b][0] && p[a][1] < p[b][1]);
  });
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (p[a][0] - p[o][0]) * (p[b][1] - p[o][1]) - (p[a][1] - p[o][1]) * (p[b][0] - p[o][0]);
  };
  std::vector<std::size_t> h(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i : idx) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], i) <= eps) --k;
    h[k++] = i;
  }
  for (std::size_t j = idx.size() - 1, t = k + 1; j-- > 0;) {
    const std::size_t i = idx[j];
    while (k >= t && cross(h[k - 2], h[k - 1], i) <= eps) --k;
    h[k++] = i;
  }
  h.resize(k > 1 ? k - 1 : k);
  return h;
}

struct Face3 {
  std::array<std::size_t, 3> v;
  std::array<double, 3> n;
  double off;
  bool alive = true;
};

// Incremental 3-d hull over points of full affine rank.
inline std::vector<Face3> hull3d(const std::vector<std::array<double, 3>> &p,
                                 std::array<std::size_t, 4> seed, double eps) {
  auto make = [&](std::size_t a, std::size_t b, std::size_t c) {
    Face3 f{{a, b, c}, {}, 0.0};
    const auto &A = p[a], &B = p[b], &C = p[c];
    const double ux = B[0] - A[0], uy = B[1] - A[1], uz = B[2] - A[2];
    const double vx = C[0] - A[0], vy = C[1] - A[1], vz = C[2] - A[2];
    f.n = {uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx};
    const double len = std::sqrt(f.n[0] * f.n[0] + f.n[1] * f.n[1] + f.n[2] * f.n[2]);
    for (auto &c2 : f.n) c2 /= len;
    f.off = f.n[0] * A[0] + f.n[1] * A[1] + f.n[2] * A[2];
    return f;
  };
  auto height = [&](const Face3 &f, std::size_t i) {
    return f.n[0] * p[i][0] + f.n[1] * p[i][1] + f.n[2] * p[i][2] - f.off;
  };
  std::vector<Face3> faces;
  const auto [a, b, c, d] = seed;
  auto oriented = [&](std::size_t x, std::size_t y, std::size_t z, std::size_t inner) {
    Face3 f = make(x, y, z);
    if (height(f, inner) > 0) f = make(x, z, y);
    faces.push_back(f);
  };
  oriented(a, b, c, d);
  oriented(a, b, d, c);
  oriented(a, c, d, b);
  oriented(b, c, d, a);

  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == a || i == b || i == c || i == d) continue;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    bool visible_any = false;
    for (auto &f : faces) {
      if (!f.alive || height(f, i) <= eps) continue;
      visible_any = true;
      f.alive = false;
      for (int e = 0; e < 3; ++e) edges.insert({f.v[e], f.v[(e + 1) % 3]});
    }
    if (!visible_any) continue;
    for (const auto &[u, w] : edges) {
      if (edges.count({w, u})) continue;  // interior edge of the visible cap
      faces.push_back(make(u, w, i));
    }
    std::erase_if(faces, [](const Face3 &f) { return !f.alive; });
  }
  return faces;
}

}  // namespace detail

/// Convex hull geometry: exact for affine rank <= 3, outer approximation by
/// supporting half-spaces along pairwise extreme-point directions otherwise.
inline HullSummary hull_summary(const DiscreteMeasure &m) {
  const std::size_t n = m.size();
  const auto d = static_cast<std::size_t>(m.dim());
  HullSummary out;

  double scale = 0.0;
  for (std::size_t i = 1; i < n; ++i) scale = std::max(scale, dist(m.point(0), m.point(i)));
  const double tol = 1e-10 * std::max(scale, 1e-300);

  // Orthonormal basis of the affine span, grown from farthest points.
  auto p0 = m.point(0);
  std::vector<Vec> basis;
  std::vector<std::size_t> pivots{0};
  for (;;) {
    double best = tol;
    std::size_t arg = n;
    Vec best_r;
    for (std::size_t i = 0; i < n; ++i) {
      Vec r = sub(m.point(i), p0);
      for (const auto &u : basis) {
        const double c = dot(r, u);
        for (std::size_t k = 0; k < d; ++k) r[k] -= c * u[k];
      }
      const double len = norm(r);
      if (len > best) {
        best = len;
        arg = i;
        best_r = std::move(r);
      }
    }
    if (arg == n || basis.size() == d) break;
    for (auto &v : best_r) v /= best;
    basis.push_back(std::move(best_r));
    pivots.push_back(arg);
  }
  const std::size_t rank = basis.size();

  // Normals to the affine span, as pairs of opposite half-spaces.
  {
    std::vector<Vec> full = basis;
    for (std::size_t axis = 0; axis < d && full.size() < d; ++axis) {
      Vec e(d, 0.0);
      e[axis] = 1.0;
      for (const auto &u : full) {
        const double c = dot(e, u);
        for (std::size_t k = 0; k < d; ++k) e[k] -= c * u[k];
      }
      const double len = norm(e);
      if (len < 1e-8) continue;
      for (auto &v : e) v /= len;
      full.push_back(e);
    }
    for (std::size_t j = rank; j < full.size(); ++j) {
      const double off = dot(full[j], p0);
      Vec neg(full[j]);
      for (auto &v : neg) v = -v;
      out.halfspaces.push_back({full[j], off});
      out.halfspaces.push_back({neg, -off});
    }
  }

  auto local = [&](std::size_t i, std::size_t j) {
    Vec r = sub(m.point(i), p0);
    return dot(r, basis[j]);
  };
  auto lift = [&](const std::vector<double> &c, double b) {
    Vec nrm(d, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j)
      for (std::size_t k = 0; k < d; ++k) nrm[k] += c[j] * basis[j][k];
    out.halfspaces.push_back({nrm, b + dot(nrm, p0)});
  };
  auto add_vertex = [&](std::size_t i) {
    auto x = m.point(i);
    out.vertices.emplace_back(x.begin(), x.end());
  };

  if (rank == 0) {
    add_vertex(0);
  } else if (rank == 1) {
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (local(i, 0) < local(lo, 0)) lo = i;
      if (local(i, 0) > local(hi, 0)) hi = i;
    }
    add_vertex(lo);
    add_vertex(hi);
    lift({1.0}, local(hi, 0));
    lift({-1.0}, -local(lo, 0));
  } else if (rank == 2) {
    std::vector<std::array<double, 2>> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = {local(i, 0), local(i, 1)};
    const auto h = detail::hull2d(q, 0.0);
    for (std::size_t k = 0; k < h.size(); ++k) {
      const auto &A = q[h[k]], &B = q[h[(k + 1) % h.size()]];
      const double ex = B[0] - A[0], ey = B[1] - A[1];
      const double len = std::hypot(ex, ey);
      const double nx = ey / len, ny = -ex / len;
      lift({nx, ny}, nx * A[0] + ny * A[1]);
      add_vertex(h[k]);
    }
  } else if (rank == 3) {
    std::vector<std::array<double, 3>> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = {local(i, 0), local(i, 1), local(i, 2)};
    const auto faces =
        detail::hull3d(q, {pivots[0], pivots[1], pivots[2], pivots[3]}, 1e-12 * std::max(scale, 1e-300));
    std::set<std::size_t> verts;
    for (const auto &f : faces) {
      lift({f.n[0], f.n[1], f.n[2]}, f.off);
      verts.insert(f.v.begin(), f.v.end());
    }
    for (std::size_t i : verts) add_vertex(i);
  } else {
    out.exact = false;
    // Extreme points along the axes, then supporting half-spaces along every
    // pairwise direction between them.
    std::set<std::size_t> extreme;
    for (std::size_t k = 0; k < d; ++k) {
      std::size_t lo = 0, hi = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (m.point(i)[k] < m.point(lo)[k]) lo = i;
        if (m.point(i)[k] > m.point(hi)[k]) hi = i;
      }
      extreme.insert(lo);
      extreme.insert(hi);
    }
    std::vector<Vec> dirs;
    for (std::size_t k = 0; k < d; ++k) {
      Vec e(d, 0.0);
      e[k] = 1.0;
      dirs.push_back(e);
      e[k] = -1.0;
      dirs.push_back(e);
    }
    for (auto i = extreme.begin(); i != extreme.end(); ++i)
      for (auto j = std::next(i); j != extreme.end(); ++j) {
        Vec u = sub(m.point(*j), m.point(*i));
        const double len = norm(u);
        if (len == 0.0) continue;
        for (auto &v : u) v /= len;
        dirs.push_back(u);
        for (auto &v : u) v = -v;
        dirs.push_back(u);
      }
    for (auto &u : dirs) {
      double off = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) off = std::max(off, dot(u, m.point(i)));
      out.halfspaces.push_back({u, off});
    }
  }

  if (out.exact) {
    for (std::size_t i = 0; i < out.vertices.size(); ++i)
      for (std::size_t j = i + 1; j < out.vertices.size(); ++j)
        out.diameter = std::max(out.diameter, dist(out.vertices[i], out.vertices[j]));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        out.diameter = std::max(out.diameter, dist(m.point(i), m.point(j)));
  }
  return out;
}

}  // namespace adpnet
