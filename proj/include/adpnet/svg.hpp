#pragma once

#include <optional>
#include <sstream>

#include "io.hpp"

namespace adpnet {

struct PlotOptions {
  double width = 600.0, height = 600.0;
  std::size_t subsample = 2000;  // max measure points drawn
  double arrow_scale = 0.1;
  std::optional<int> project_axis;  // coordinate dropped for d = 3
};

/// Plot input: network, optional measure points, optional per-node field.
struct PlotData {
  Network network;
  std::optional<DiscreteMeasure> measure;
  std::vector<Vec> field_positions, field_vectors;
};

inline int parse_axis(const std::string &s) {
  if (s == "x" || s == "0") return 0;
  if (s == "y" || s == "1") return 1;
  if (s == "z" || s == "2") return 2;
  throw ValidationError("project axis must be x, y or z");
}

inline PlotData plot_data_from_json(const nlohmann::json &j) {
  PlotData pd;
  pd.network = network_from_json(j.contains("network") ? j.at("network") : j);
  if (j.contains("field")) {
    const auto &f = j.at("field");
    for (const auto &v : f.at("positions")) pd.field_positions.push_back(v.get<Vec>());
    for (const auto &v : f.at("b")) pd.field_vectors.push_back(v.get<Vec>());
    if (pd.field_positions.size() != pd.field_vectors.size())
      throw ValidationError("field positions and vectors differ in length");
  }
  return pd;
}

inline std::string render_svg(const PlotData &pd, const PlotOptions &opt) {
  const int d = pd.network.dim();
  if (pd.measure && pd.measure->dim() != d) throw ValidationError("measure and network dimensions differ");
  int ax = 0, ay = 1;
  if (d == 3) {
    if (!opt.project_axis) throw UnsupportedError("3-d plots need --project-axis");
    const int drop = *opt.project_axis;
    ax = drop == 0 ? 1 : 0;
    ay = drop == 2 ? 1 : 2;
  } else if (d > 3) {
    throw UnsupportedError("plots support d <= 3 only");
  } else if (opt.project_axis) {
    throw ValidationError("--project-axis applies to 3-d data only");
  }
  auto px = [&](ConstPoint x) { return x[static_cast<std::size_t>(ax)]; };
  auto py = [&](ConstPoint x) { return d == 1 ? 0.0 : x[static_cast<std::size_t>(ay)]; };

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  auto grow = [&](ConstPoint x) {
    lo_x = std::min(lo_x, px(x));
    hi_x = std::max(hi_x, px(x));
    lo_y = std::min(lo_y, py(x));
    hi_y = std::max(hi_y, py(x));
  };
  for (std::size_t v = 0; v < pd.network.vertex_count(); ++v) grow(pd.network.vertex(v));
  std::size_t stride = 1;
  if (pd.measure) {
    for (std::size_t i = 0; i < pd.measure->size(); ++i) grow(pd.measure->point(i));
    if (opt.subsample > 0) stride = std::max<std::size_t>(1, (pd.measure->size() + opt.subsample - 1) / opt.subsample);
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double margin = 0.05 * std::min(opt.width, opt.height);
  const double s = std::min(opt.width, opt.height) - 2.0 * margin;
  auto sx = [&](double x) { return margin + (x - lo_x) / span * s; };
  auto sy = [&](double y) { return opt.height - margin - (y - lo_y) / span * s; };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  os << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
        "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#c0392b\"/></marker></defs>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pd.measure) {
    os << "<g class=\"measure\" fill=\"#7f8c8d\">\n";
    for (std::size_t i = 0; i < pd.measure->size(); i += stride) {
      auto x = pd.measure->point(i);
      os << "<circle cx=\"" << sx(px(x)) << "\" cy=\"" << sy(py(x)) << "\" r=\"1.2\"/>\n";
    }
    os << "</g>\n";
  }
  os << "<g class=\"network\" stroke=\"#2c3e50\" stroke-width=\"2\">\n";
  for (const auto &[a, b] : pd.network.edges()) {
    auto pa = pd.network.vertex(static_cast<std::size_t>(a)), pb = pd.network.vertex(static_cast<std::size_t>(b));
    os << "<line x1=\"" << sx(px(pa)) << "\" y1=\"" << sy(py(pa)) << "\" x2=\"" << sx(px(pb)) << "\" y2=\""
       << sy(py(pb)) << "\"/>\n";
  }
  os << "</g>\n";
  const auto deg = pd.network.degrees();
  os << "<g class=\"endpoints\" fill=\"#e67e22\">\n";
  for (std::size_t v = 0; v < pd.network.vertex_count(); ++v)
    if (deg[v] <= 1) {
      auto x = pd.network.vertex(v);
      os << "<circle cx=\"" << sx(px(x)) << "\" cy=\"" << sy(py(x)) << "\" r=\"4\"/>\n";
    }
  os << "</g>\n";
  os << "<g class=\"field\" stroke=\"#c0392b\" stroke-width=\"1\" fill=\"none\">\n";
  for (std::size_t k = 0; k < pd.field_positions.size(); ++k) {
    const Vec &x = pd.field_positions[k];
    const Vec &b = pd.field_vectors[k];
    if (x.size() != static_cast<std::size_t>(d) || b.size() != x.size())
      throw ValidationError("field entry has wrong dimension");
    if (norm(b) == 0.0 || opt.arrow_scale == 0.0) continue;
    Vec tip(x);
    for (std::size_t c = 0; c < tip.size(); ++c) tip[c] += opt.arrow_scale * b[c];
    os << "<path d=\"M" << sx(px(x)) << ',' << sy(py(x)) << " L" << sx(px(tip)) << ',' << sy(py(tip))
       << "\" marker-end=\"url(#head)\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace adpnet
