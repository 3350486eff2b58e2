#pragma once

#include <CLI11.hpp>
#include <iostream>

#include "svg.hpp"

namespace adpnet::cli {

namespace fs = std::filesystem;

struct RunConfig {
  std::string measure, network, result, out, config;
  int dim = 0;
  std::size_t n = 2000;
  std::string mode = "hard";
  std::string init = "principal_segment";
  bool strict = false;
  SolverConfig solver;
  // bounds
  double eps = 0.05;
  int center_vertex = -1;
  double budget = 0.0;
  bool per_point = false;
  // sweep
  std::vector<double> lengths;
  // plot
  PlotOptions plot;
  std::string project_axis;
};

inline void check_readable(const std::string &path, const char *what) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string("cannot read ") + what + ": " + path);
}

inline SolverConfig finish_solver_config(RunConfig &rc) {
  SolverConfig c = rc.solver;
  if (rc.mode == "hard")
    c.mode = SolveMode::hard;
  else if (rc.mode == "soft")
    c.mode = SolveMode::soft;
  else
    throw ValidationError("mode must be hard or soft");
  if (rc.init == "principal_segment")
    c.init = InitStrategy::principal_segment;
  else if (rc.init == "mst_of_centers")
    c.init = InitStrategy::mst_of_centers;
  else if (rc.init == "point")
    c.init = InitStrategy::point;
  else
    throw ValidationError("init must be principal_segment, mst_of_centers or point");
  c.validate();
  return c;
}

inline DiscreteMeasure measure_or_default(const RunConfig &rc) {
  if (!rc.measure.empty()) return load_measure(rc.measure, rc.dim);
  return sample_density(UniformBox{{0.0, 0.0}, {1.0, 1.0}}, rc.n, rc.solver.seed);
}

inline void add_solver_flags(CLI::App *app, RunConfig &rc) {
  app->add_option("--p", rc.solver.p, "Exponent p >= 1");
  app->add_option("--length", rc.solver.length, "Length budget (hard mode)");
  app->add_option("--lambda", rc.solver.lambda, "Length penalty (soft mode)");
  app->add_option("--mode", rc.mode, "hard or soft");
  app->add_option("--h", rc.solver.h, "Sampling spacing (0 = auto)");
  app->add_option("--step", rc.solver.step, "Initial step size");
  app->add_option("--max-iters", rc.solver.max_iters, "Iteration cap");
  app->add_option("--grad-tol", rc.solver.grad_tol, "Stopping tolerance");
  app->add_option("--seed", rc.solver.seed, "Random seed");
  app->add_option("--init", rc.init, "principal_segment, mst_of_centers or point");
  app->add_option("--bandwidth", rc.solver.bandwidth, "Initial mollifier bandwidth (0 = auto)");
  app->add_option("--prune-mass-tol", rc.solver.topology.prune_mass_tol);
  app->add_option("--atom-insert-threshold", rc.solver.topology.atom_insert_threshold);
  app->add_option("--min-edge", rc.solver.topology.min_edge);
  app->add_option("--max-edge", rc.solver.topology.max_edge);
}

inline void add_measure_flags(CLI::App *app, RunConfig &rc) {
  app->add_option("--measure", rc.measure, "Measure file (CSV or JSON)");
  app->add_option("--dim", rc.dim, "Coordinate count for headerless CSV");
}

inline void print_diagnostics(std::ostream &os, const DiagnosticsReport &r) {
  os << "net field norm    " << r.net_field_norm << " (tol " << r.net_field_tol << ")\n";
  os << "hull violations   " << r.hull_violations << "\n";
  os << "ambiguous mass    " << r.ambiguous_mass << "\n";
  os << "cycle rank        " << r.topology.cycle_rank << ", max degree " << r.topology.max_degree << ", endpoints "
     << r.topology.endpoint_count << "\n";
  for (const auto &a : r.atom_checks)
    os << "endpoint " << a.vertex << "  mass " << a.mass << "  |B| " << a.b_norm << "  lhs " << a.lhs << "  rhs "
       << a.rhs << (a.pass ? "  pass" : "  FAIL") << "\n";
  os << "overall           " << (r.ok() ? "ok" : "failures") << "\n";
}

inline int cmd_solve(RunConfig &rc) {
  check_readable(rc.measure, "measure");
  check_readable(rc.network, "network");
  if (rc.measure.empty()) throw ValidationError("solve needs --measure");
  const SolverConfig cfg = finish_solver_config(rc);
  const auto mu = load_measure(rc.measure, rc.dim);
  std::optional<Network> init;
  if (!rc.network.empty()) init = load_network(rc.network);
  const auto res = solve(mu, cfg, init);
  const auto rep = check_minimizer(mu, res, cfg);
  nlohmann::json diag = diagnostics_to_json(rep);
  bool ok = rep.ok();
  if (cfg.mode == SolveMode::soft) {
    const auto soft = check_soft(mu, res, cfg.lambda, cfg.p, cfg.grad_tol);
    diag["soft"] = soft_to_json(soft);
    ok = ok && (!soft.applicable || (soft.scaling_ok() && soft.nontrivial_field));
  }
  const fs::path out = rc.out.empty() ? fs::path(".") : fs::path(rc.out);
  write_atomic(out / "solution.json", solution_to_json(res, cfg).dump(2) + "\n");
  write_atomic(out / "trace.csv", trace_csv(res));
  write_atomic(out / "diagnostics.json", diag.dump(2) + "\n");
  std::cout << "J_p " << res.j_value << "  H1 " << total_length(res.network) << "  iterations " << res.iterations
            << (res.converged ? "  converged" : "  not converged") << "\n";
  print_diagnostics(std::cout, rep);
  return rc.strict && !ok ? 2 : 0;
}

inline int cmd_sweep(RunConfig &rc) {
  check_readable(rc.measure, "measure");
  if (rc.lengths.empty()) throw ValidationError("sweep needs --lengths");
  SolverConfig cfg = finish_solver_config(rc);
  const auto mu = measure_or_default(rc);
  const auto sw = sweep(mu, cfg.p, rc.lengths, cfg);
  const std::string csv = sweep_csv(sw);
  if (!rc.out.empty()) write_atomic(fs::path(rc.out) / "sweep.csv", csv);
  std::cout << csv;
  bool ok = true;
  for (double q : sw.quotients) ok = ok && q <= 1e-6;
  return rc.strict && !ok ? 2 : 0;
}

inline int cmd_verify(RunConfig &rc) {
  check_readable(rc.measure, "measure");
  const std::string src = !rc.result.empty() ? rc.result : rc.network;
  check_readable(src, "network");
  if (rc.measure.empty() || src.empty()) throw ValidationError("verify needs --measure and --result or --network");
  const SolverConfig cfg = finish_solver_config(rc);
  const auto mu = load_measure(rc.measure, rc.dim);
  const auto res = describe(mu, load_network(src), cfg);
  const auto rep = check_minimizer(mu, res, cfg);
  nlohmann::json diag = diagnostics_to_json(rep);
  bool ok = rep.ok();
  if (cfg.mode == SolveMode::soft) {
    const auto soft = check_soft(mu, res, cfg.lambda, cfg.p, cfg.grad_tol);
    diag["soft"] = soft_to_json(soft);
    ok = ok && (!soft.applicable || (soft.scaling_ok() && soft.nontrivial_field));
  }
  if (!rc.out.empty()) write_atomic(fs::path(rc.out) / "diagnostics.json", diag.dump(2) + "\n");
  print_diagnostics(std::cout, rep);
  return rc.strict && !ok ? 2 : 0;
}

inline int cmd_project(RunConfig &rc) {
  check_readable(rc.measure, "measure");
  check_readable(rc.network, "network");
  if (rc.measure.empty() || rc.network.empty()) throw ValidationError("project needs --measure and --network");
  const auto mu = load_measure(rc.measure, rc.dim);
  const auto net = load_network(rc.network);
  const auto tab = project(mu, net);
  std::ostringstream os;
  write_projection_csv(os, tab);
  if (rc.out.empty())
    std::cout << os.str();
  else
    write_atomic(rc.out, os.str());
  return 0;
}

inline int cmd_bounds(RunConfig &rc) {
  check_readable(rc.measure, "measure");
  check_readable(rc.network, "network");
  if (rc.measure.empty() || rc.network.empty()) throw ValidationError("bounds needs --measure and --network");
  if (rc.center_vertex < 0) throw ValidationError("bounds needs --center-vertex");
  const auto mu = load_measure(rc.measure, rc.dim);
  const auto net = load_network(rc.network);
  const double budget = rc.budget > 0.0 ? rc.budget : total_length(net);
  const auto spec = make_competitor_spec(net, rc.center_vertex, rc.eps, budget);
  const auto tab = project(mu, net);
  const auto rep = bound_check(mu, net, tab, spec, rc.solver.p);
  const std::string body = bound_to_json(rep, rc.per_point).dump(2) + "\n";
  if (rc.out.empty())
    std::cout << body;
  else
    write_atomic(rc.out, body);
  std::cerr << "violations " << rep.violations << "  aggregate " << (rep.aggregate_ok ? "ok" : "FAIL") << "\n";
  return rc.strict && (rep.violations > 0 || !rep.aggregate_ok) ? 2 : 0;
}

inline int cmd_plot(RunConfig &rc) {
  check_readable(rc.result, "result");
  check_readable(rc.measure, "measure");
  if (rc.result.empty() || rc.out.empty()) throw ValidationError("plot needs --result and --out");
  std::ifstream in(rc.result);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(e.what(), 1);
  }
  PlotData pd = plot_data_from_json(j);
  if (!rc.measure.empty()) pd.measure = load_measure(rc.measure, rc.dim);
  if (!rc.project_axis.empty()) rc.plot.project_axis = parse_axis(rc.project_axis);
  write_atomic(rc.out, render_svg(pd, rc.plot));
  return 0;
}

/// Reads `key = value` lines ('#' starts a comment).
inline std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config: " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string t) {
    const auto a = t.find_first_not_of(" \t\r");
    const auto b = t.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line without '=': " + line, lineno);
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ParseError("config line without key", lineno);
    kv.emplace_back(key, value);
  }
  return kv;
}

/// Command line with config entries inserted after the subcommand, skipping
/// keys that are also given as flags. Arguments are returned in the reversed
/// order CLI11 expects for parse(vector).
inline std::vector<std::string> expand_config(int argc, const char *const *argv) {
  std::vector<std::string> in(argv + 1, argv + argc);
  std::string path;
  for (std::size_t k = 0; k < in.size(); ++k) {
    if (in[k] == "--config" && k + 1 < in.size()) path = in[k + 1];
    if (in[k].rfind("--config=", 0) == 0) path = in[k].substr(9);
  }
  std::vector<std::string> out;
  if (!in.empty()) out.push_back(in[0]);
  if (!path.empty()) {
    for (const auto &[key, value] : read_flat_config(path)) {
      const std::string flag = "--" + key;
      bool given = false;
      for (const auto &a : in) given |= a == flag || a.rfind(flag + "=", 0) == 0;
      if (given || value == "false") continue;
      out.push_back(flag);
      if (value != "true") out.push_back(value);
    }
  }
  out.insert(out.end(), in.begin() + (in.empty() ? 0 : 1), in.end());
  std::reverse(out.begin(), out.end());
  return out;
}

/// Entry point; returns the process exit code.
inline int run(int argc, const char *const *argv) {
  CLI::App app{"Average-distance network solver", "adpnet"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  RunConfig rc;

  auto *solve_cmd = app.add_subcommand("solve", "Optimize a network for a measure");
  add_measure_flags(solve_cmd, rc);
  add_solver_flags(solve_cmd, rc);
  solve_cmd->add_option("--network", rc.network, "Initial network JSON");
  solve_cmd->add_option("--out", rc.out, "Output directory");
  solve_cmd->add_flag("--strict", rc.strict, "Exit 2 when a check fails");

  auto *sweep_cmd = app.add_subcommand("sweep", "Solve over increasing budgets with warm starts");
  add_measure_flags(sweep_cmd, rc);
  add_solver_flags(sweep_cmd, rc);
  sweep_cmd->add_option("--lengths", rc.lengths, "Comma-separated budgets")->delimiter(',');
  sweep_cmd->add_option("--n", rc.n, "Sample count when no measure is given");
  sweep_cmd->add_option("--out", rc.out, "Output directory");
  sweep_cmd->add_flag("--strict", rc.strict);

  auto *verify_cmd = app.add_subcommand("verify", "Minimizer checks on a given network");
  add_measure_flags(verify_cmd, rc);
  add_solver_flags(verify_cmd, rc);
  verify_cmd->add_option("--result", rc.result, "solution.json");
  verify_cmd->add_option("--network", rc.network, "Network JSON");
  verify_cmd->add_option("--out", rc.out, "Output directory");
  verify_cmd->add_flag("--strict", rc.strict);

  auto *project_cmd = app.add_subcommand("project", "Closest-point projection table");
  add_measure_flags(project_cmd, rc);
  project_cmd->add_option("--network", rc.network, "Network JSON");
  project_cmd->add_option("--out", rc.out, "CSV file");

  auto *bounds_cmd = app.add_subcommand("bounds", "Competitor lower bounds");
  add_measure_flags(bounds_cmd, rc);
  bounds_cmd->add_option("--network", rc.network, "Network JSON");
  bounds_cmd->add_option("--p", rc.solver.p);
  bounds_cmd->add_option("--eps", rc.eps);
  bounds_cmd->add_option("--center-vertex", rc.center_vertex);
  bounds_cmd->add_option("--length", rc.budget, "Budget (default: network length)");
  bounds_cmd->add_flag("--per-point", rc.per_point);
  bounds_cmd->add_option("--out", rc.out, "JSON file");
  bounds_cmd->add_flag("--strict", rc.strict);

  auto *plot_cmd = app.add_subcommand("plot", "SVG of a solution");
  plot_cmd->add_option("--result", rc.result, "solution.json or network JSON");
  add_measure_flags(plot_cmd, rc);
  plot_cmd->add_option("--out", rc.out, "SVG file");
  plot_cmd->add_option("--width", rc.plot.width);
  plot_cmd->add_option("--height", rc.plot.height);
  plot_cmd->add_option("--subsample", rc.plot.subsample);
  plot_cmd->add_option("--arrow-scale", rc.plot.arrow_scale);
  plot_cmd->add_option("--project-axis", rc.project_axis, "x, y or z");

  for (auto *sub : app.get_subcommands({})) sub->add_option("--config", rc.config, "Flat key = value file; flags win");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(rc);
    if (sweep_cmd->parsed()) return cmd_sweep(rc);
    if (verify_cmd->parsed()) return cmd_verify(rc);
    if (project_cmd->parsed()) return cmd_project(rc);
    if (bounds_cmd->parsed()) return cmd_bounds(rc);
    if (plot_cmd->parsed()) return cmd_plot(rc);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace adpnet::cli
