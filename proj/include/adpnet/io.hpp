#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "verify.hpp"

namespace adpnet {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline const char *to_string(SolveMode m) { return m == SolveMode::hard ? "hard" : "soft"; }

inline const char *to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::principal_segment: return "principal_segment";
    case InitStrategy::mst_of_centers: return "mst_of_centers";
    case InitStrategy::point: return "point";
  }
  return "?";
}

inline nlohmann::json config_to_json(const SolverConfig &c) {
  nlohmann::json j;
  j["p"] = c.p;
  j["mode"] = to_string(c.mode);
  if (c.mode == SolveMode::hard)
    j["length"] = c.length;
  else
    j["lambda"] = c.lambda;
  j["h"] = c.h;
  j["step"] = c.step;
  j["max_iters"] = c.max_iters;
  j["grad_tol"] = c.grad_tol;
  j["seed"] = c.seed;
  j["bandwidth"] = c.bandwidth;
  j["init"] = to_string(c.init);
  j["topology"] = {{"prune_mass_tol", c.topology.prune_mass_tol},
                   {"atom_insert_threshold", c.topology.atom_insert_threshold},
                   {"min_edge", c.topology.min_edge},
                   {"max_edge", c.topology.max_edge},
                   {"every", c.topology.every}};
  return j;
}

inline nlohmann::json field_to_json(const BarycentreField &f, const SampledNetwork &sampled) {
  nlohmann::json pos = nlohmann::json::array(), b = nlohmann::json::array();
  for (std::size_t k = 0; k < f.size(); ++k) {
    auto x = sampled.position(k);
    auto v = f.at(k);
    pos.push_back(Vec(x.begin(), x.end()));
    b.push_back(Vec(v.begin(), v.end()));
  }
  return {{"p", f.p}, {"positions", pos}, {"b", b}, {"mass", f.mass}, {"net", f.net}, {"l2sq", f.l2sq}};
}

inline nlohmann::json solution_to_json(const SolveResult &r, const SolverConfig &c) {
  nlohmann::json j;
  j["network"] = network_to_json(r.network);
  j["j_value"] = r.j_value;
  j["objective"] = r.objective;
  j["total_length"] = total_length(r.network);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["config"] = config_to_json(c);
  nlohmann::json tr;
  Vec a, b, cc, d;
  for (const auto &row : r.trace) {
    a.push_back(row.j_p);
    b.push_back(row.h1);
    cc.push_back(row.b_l2sq);
    d.push_back(row.net_norm);
  }
  tr["j_p"] = a;
  tr["h1"] = b;
  tr["b_l2sq"] = cc;
  tr["net_norm"] = d;
  j["trace"] = tr;
  j["field"] = field_to_json(r.field, r.sampled);
  j["messages"] = r.diagnostics;
  return j;
}

inline std::string trace_csv(const SolveResult &r) {
  std::ostringstream os;
  os << "iter,J_p,H1,B_l2sq,net_norm\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const auto &t = r.trace[k];
    os << k << ',' << detail::fmt17(t.j_p) << ',' << detail::fmt17(t.h1) << ',' << detail::fmt17(t.b_l2sq) << ','
       << detail::fmt17(t.net_norm) << '\n';
  }
  return os.str();
}

/// Node index, position, nu, B components.
inline std::string field_csv(const BarycentreField &f, const SampledNetwork &sampled) {
  std::ostringstream os;
  const auto d = static_cast<std::size_t>(f.dim);
  os << "node";
  for (std::size_t c = 0; c < d; ++c) os << ",x" << c;
  os << ",nu";
  for (std::size_t c = 0; c < d; ++c) os << ",b" << c;
  os << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    os << k;
    for (double v : sampled.position(k)) os << ',' << detail::fmt17(v);
    os << ',' << detail::fmt17(f.mass[k]);
    for (double v : f.at(k)) os << ',' << detail::fmt17(v);
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json topology_to_json(const TopologyReport &t) {
  return {{"endpoint_count", t.endpoint_count},
          {"branch_point_count", t.branch_point_count},
          {"max_degree", t.max_degree},
          {"cycle_rank", t.cycle_rank},
          {"articulation_vertex_ids", t.articulation_vertex_ids},
          {"endpoint_vertex_ids", t.endpoint_vertex_ids}};
}

inline nlohmann::json diagnostics_to_json(const DiagnosticsReport &r) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto &a : r.atom_checks)
    atoms.push_back({{"vertex", a.vertex},
                     {"mass", a.mass},
                     {"b_norm", a.b_norm},
                     {"lhs", a.lhs},
                     {"rhs", a.rhs},
                     {"rhs_min_lambda", a.rhs_min_lambda},
                     {"pass", a.pass}});
  nlohmann::json j = {{"net_field_norm", r.net_field_norm},
                      {"net_field_tol", r.net_field_tol},
                      {"hull_violations", r.hull_violations},
                      {"ambiguous_mass", r.ambiguous_mass},
                      {"topology", topology_to_json(r.topology)},
                      {"lambda", r.lambda},
                      {"lambda_min", r.lambda_min},
                      {"length", r.length},
                      {"atom_checks", atoms},
                      {"power_bound_failures", r.power_bound_failures},
                      {"ok", r.ok()}};
  j["fd_gap"] = r.fd_available ? nlohmann::json(r.fd_gap) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json soft_to_json(const SoftReport &r) {
  if (!r.applicable) return {{"applicable", false}, {"nontrivial_field", r.nontrivial_field}};
  return {{"applicable", true},
          {"scaling_quotient", r.scaling_quotient},
          {"scaling_ok", r.scaling_ok()},
          {"nontrivial_field", r.nontrivial_field},
          {"b_l2sq", r.b_l2sq}};
}

inline nlohmann::json fd_to_json(const FDReport &r) {
  return {{"eps", r.eps},
          {"quotients", r.quotients},
          {"gaps", r.gaps},
          {"ratios", r.ratios},
          {"first_variation", r.first_variation},
          {"j0", r.j0},
          {"constant", r.constant},
          {"power_bound_failures", r.power_bound_failures},
          {"success", r.success}};
}

inline nlohmann::json bound_to_json(const BoundReport &r, bool per_point = false) {
  nlohmann::json j = {{"p", r.p},
                      {"epsilon", r.epsilon},
                      {"tau", r.tau},
                      {"alpha", r.alpha},
                      {"kappa", r.kappa},
                      {"M", r.M},
                      {"c", r.c},
                      {"a_radius", r.a_radius},
                      {"a_mass", r.a_mass},
                      {"beta_a", r.beta_a},
                      {"violations", r.violations},
                      {"min_slack", r.min_slack},
                      {"j_sigma", r.j_sigma},
                      {"j_competitor", r.j_competitor},
                      {"j_difference", r.j_difference},
                      {"rhs", r.rhs},
                      {"chain_rhs", r.chain_rhs},
                      {"psi_zeta_integral", r.psi_zeta_integral},
                      {"psi_zeta_estimate", r.psi_zeta_estimate},
                      {"aggregate_ok", r.aggregate_ok},
                      {"chain_ok", r.chain_ok},
                      {"length_competitor", r.length_competitor}};
  if (per_point) {
    j["psi"] = r.psi;
    j["psi1"] = r.psi1;
    j["zeta"] = r.zeta;
    j["lhs"] = r.lhs;
  }
  return j;
}

inline std::string sweep_csv(const SweepResult &s) {
  std::ostringstream os;
  os << "l,J,quotient\n";
  for (std::size_t k = 0; k < s.lengths.size(); ++k) {
    os << detail::fmt17(s.lengths[k]) << ',' << detail::fmt17(s.j[k]) << ',';
    if (k < s.quotients.size()) os << detail::fmt17(s.quotients[k]);
    os << '\n';
  }
  return os.str();
}

}  // namespace adpnet
