// lbtopo command-line driver.
//
// Exit codes: 0 ok, 1 config error, 2 diverged, 3 max-steps (verify: tolerance
// missed; optimize: iteration cap).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lbtopo/io.hpp"
#include "lbtopo/optimizer.hpp"

using namespace lbtopo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 1, kDiverged = 2, kMaxSteps = 3 };

int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Converged:
      return kOk;
    case RunStatus::MaxSteps:
      return kMaxSteps;
    case RunStatus::Diverged:
      return kDiverged;
  }
  return kDiverged;
}

struct Options {
  std::string config;
  std::string out = "out";
  std::string method;
  int threads = 0;
  std::string nodes = "diag:20";
  std::optional<double> fdm_step;
};

class Clock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t_).count();
    t_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

/// Manifest plus the files written so far; written last.
class Run {
 public:
  Run(std::string_view command, const Options& opt, const Case& c)
      : out_(opt.out), manifest_(make_manifest(command, c.config)) {
    manifest_["resolved"] = {{"u_in", c.config.u_in ? json(*c.config.u_in) : json(nullptr)},
                             {"p1", c.config.p1 ? json(*c.config.p1) : json(nullptr)},
                             {"p0", c.config.p0 ? json(*c.config.p0) : json(nullptr)},
                             {"length", c.length},
                             {"length_basis", c.length_basis},
                             {"Re", reynolds_number(c.config, c.length)},
                             {"nu", c.config.nu()},
                             {"designable_nodes", c.design.designable_count()}};
    manifest_["timings"] = json::object();
    manifest_["outputs"] = json::array();
  }

  void write(const std::string& name, std::string_view content) {
    write_atomic(out_ / name, content);
    manifest_["outputs"].push_back(name);
  }
  json& operator[](const std::string& key) { return manifest_[key]; }
  void time(const std::string& stage, double seconds) { manifest_["timings"][stage] = seconds; }

  int finish(int code) {
    manifest_["exit_code"] = code;
    write_atomic(out_ / "manifest.json", manifest_.dump(2) + "\n");
    return code;
  }

 private:
  fs::path out_;
  json manifest_;
};

json run_json(const RunResult& r) {
  json j = {{"status", to_string(r.status)}, {"steps", r.steps}};
  if (r.divergence_step >= 0) j["divergence_step"] = r.divergence_step;
  if (!r.history.empty()) j["final_residual"] = r.history.back().residual;
  return j;
}

void add_history(CsvTable& t, std::string_view stage, const RunResult& r) {
  for (const HistoryRow& h : r.history) t.add({std::string(stage), h.step, h.residual, h.mass, h.objective});
}

std::vector<VtkField> forward_fields(const ForwardState& s) {
  const MacroFields m = s.flow.macros();
  std::vector<VtkField> f = {{"alpha", s.flow.alpha()}, {"rho", m.rho}, {"u", m.u}};
  if (s.thermal) f.push_back({"T", s.thermal->temperature()});
  return f;
}

std::string history_csv(const ForwardState& s) {
  CsvTable t({"stage", "step", "residual", "mass", "objective"});
  add_history(t, "flow", s.flow_run);
  if (s.thermal) add_history(t, "thermal", s.thermal_run);
  return t.str();
}

json forward_json(const ForwardState& s) {
  json j = {{"status", to_string(s.status())}, {"objective", s.objective}, {"flow", run_json(s.flow_run)}};
  if (s.thermal) j["thermal"] = run_json(s.thermal_run);
  return j;
}

AdjointMethod method_or(const Options& opt, AdjointMethod fallback) {
  return opt.method.empty() ? fallback : parse_adjoint_method(opt.method);
}

/// Flat indices, x:y[:z] coordinates, or diag:N, comma separated.
std::vector<Index> parse_nodes(const std::string& list, const Case& c) {
  std::vector<Index> nodes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      if (item.starts_with("diag:")) {
        const auto d = diagonal_nodes(c, std::stoi(item.substr(5)));
        nodes.insert(nodes.end(), d.begin(), d.end());
      } else if (item.find(':') != std::string::npos) {
        int xyz[3] = {0, 0, 0};
        std::stringstream is(item);
        std::string part;
        int k = 0;
        while (std::getline(is, part, ':')) {
          if (k == 3) throw ConfigError("");
          xyz[k++] = std::stoi(part);
        }
        if (k < 2) throw ConfigError("");
        const GridGeometry& g = c.geometry;
        if (xyz[0] < 0 || xyz[0] >= g.nx() || xyz[1] < 0 || xyz[1] >= g.ny() || xyz[2] < 0 || xyz[2] >= g.nz())
          throw ConfigError("node " + item + " is outside the grid");
        nodes.push_back(g.index(xyz[0], xyz[1], xyz[2]));
      } else {
        const long n = std::stol(item);
        if (n < 0 || n >= c.geometry.size()) throw ConfigError("node " + item + " is outside the grid");
        nodes.push_back(n);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(*e.what() ? e.what() : "bad node '" + item + "'");
    } catch (const std::exception&) {
      throw ConfigError("bad node '" + item + "'");
    }
  }
  if (nodes.empty()) throw ConfigError("node list is empty");
  return nodes;
}

int cmd_forward(const Options& opt, const Problem& p) {
  Run run("forward", opt, p.data());
  Clock clock;
  const ForwardState s = p.solve(p.data().design.alpha);
  run.time("forward", clock.lap());
  run.write("fields.vtk", vtk_structured_points(p.data().geometry, forward_fields(s), "lbtopo forward"));
  run.write("convergence.csv", history_csv(s));
  run["forward"] = forward_json(s);
  std::printf("forward %s after %ld steps, J = %s\n", std::string(to_string(s.status())).c_str(), s.steps(),
              format_double(s.objective).c_str());
  return run.finish(exit_code(s.status()));
}

int cmd_adjoint(const Options& opt, const Problem& p) {
  const AdjointMethod method = method_or(opt, AdjointMethod::Discrete);
  Run run("adjoint", opt, p.data());
  run["method"] = to_string(method);
  Clock clock;
  const ForwardState s = p.solve(p.data().design.alpha);
  run.time("forward", clock.lap());
  run["forward"] = forward_json(s);
  run.write("convergence.csv", history_csv(s));
  if (s.status() != RunStatus::Converged) {
    std::printf("forward %s, adjoint skipped\n", std::string(to_string(s.status())).c_str());
    return run.finish(exit_code(s.status()));
  }
  const SensitivityResult r = solve_sensitivity(p, s, method);
  run.time("adjoint", clock.lap());
  run["adjoint"] = {{"status", to_string(r.status())}, {"flow", run_json(r.flow_adjoint)}};
  if (p.thermal()) run["adjoint"]["thermal"] = run_json(r.thermal_adjoint);
  if (!r.inconsistency.empty()) run["adjoint"]["max_inconsistency"] = r.inconsistency.back();

  const GridGeometry& g = p.data().geometry;
  std::vector<VtkField> fields = {{"sensitivity", r.jw}};
  for (Index i = 0; i < r.adjoint_field.rows(); ++i)
    fields.push_back({"fstar_" + std::to_string(i), Eigen::VectorXd(r.adjoint_field.row(i).transpose())});
  run.write("adjoint.vtk", vtk_structured_points(g, fields, "lbtopo adjoint"));
  run.write("sensitivity.vtk", vtk_structured_points(g, {{"sensitivity", r.jw}, {"alpha", s.flow.alpha()}}));
  CsvTable t({"node", "x", "y", "z", "designable", "sensitivity"});
  for (Index n = 0; n < g.size(); ++n) {
    const Eigen::Vector3i c = g.coords(n);
    t.add({static_cast<long>(n), static_cast<long>(c.x()), static_cast<long>(c.y()), static_cast<long>(c.z()),
           static_cast<long>(p.data().design.designable[n]), r.jw[n]});
  }
  run.write("sensitivity.csv", t.str());
  std::printf("%s adjoint %s after %ld steps\n", std::string(to_string(method)).c_str(),
              std::string(to_string(r.status())).c_str(), r.flow_adjoint.steps + r.thermal_adjoint.steps);
  return run.finish(exit_code(r.status()));
}

int cmd_verify(const Options& opt, const Problem& p) {
  const std::vector<Index> nodes = parse_nodes(opt.nodes, p.data());
  Run run("verify", opt, p.data());
  Clock clock;
  const ForwardState s = p.solve(p.data().design.alpha);
  run.time("forward", clock.lap());
  run["forward"] = forward_json(s);
  if (s.status() != RunStatus::Converged) {
    std::printf("forward %s, nothing verified\n", std::string(to_string(s.status())).c_str());
    return run.finish(exit_code(s.status()));
  }
  const SensitivityResult disc = solve_sensitivity(p, s, AdjointMethod::Discrete);
  run.time("discrete_adjoint", clock.lap());
  run["discrete_adjoint"] = run_json(disc.flow_adjoint);
  std::optional<SensitivityResult> cont;
  if (!p.thermal()) {
    cont = solve_sensitivity(p, s, AdjointMethod::Continuous);
    run.time("continuous_adjoint", clock.lap());
    run["continuous_adjoint"] = run_json(cont->flow_adjoint);
  }
  FdmOptions fo;
  fo.h = opt.fdm_step.value_or(p.config().fdm_step);
  fo.tol = p.config().forward_tol;
  fo.max_steps = p.config().max_steps;
  fo.window = p.config().window;
  fo.pair_average = p.config().pair_average;
  const std::vector<FdmProbe> probes = fdm_oracle(p, s, nodes, fo);
  run.time("fdm", clock.lap());

  const GridGeometry& g = p.data().geometry;
  CsvTable t({"node", "x", "y", "z", "fdm", "discrete", "continuous", "j_plus", "j_minus", "steps", "flagged"});
  Eigen::VectorXd de(static_cast<Index>(nodes.size())), ce(static_cast<Index>(nodes.size()));
  json flagged = json::array();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const FdmProbe& pr = probes[k];
    const Eigen::Vector3i c = g.coords(pr.node);
    de[static_cast<Index>(k)] = disc.jw[pr.node];
    ce[static_cast<Index>(k)] = cont ? cont->jw[pr.node] : std::numeric_limits<double>::quiet_NaN();
    t.add({static_cast<long>(pr.node), static_cast<long>(c.x()), static_cast<long>(c.y()), static_cast<long>(c.z()),
           pr.derivative, de[static_cast<Index>(k)], ce[static_cast<Index>(k)], pr.j_plus, pr.j_minus, pr.steps,
           static_cast<long>(pr.flagged)});
    if (pr.flagged) {
      flagged.push_back(pr.node);
      std::printf("node %ld flagged: perturbed solve did not converge, excluded\n", static_cast<long>(pr.node));
    }
  }
  run.write("comparison.csv", t.str());

  const bool usable = flagged.size() < probes.size();
  const double derr = usable ? relative_l2_error(de, probes) : std::numeric_limits<double>::quiet_NaN();
  const double tol = p.config().verify_tol;
  json summary = {{"nodes", nodes.size()}, {"flagged", flagged}, {"fdm_step", fo.h},
                  {"discrete_error", derr}, {"tolerance", tol}};
  if (cont && usable) summary["continuous_error"] = relative_l2_error(ce, probes);
  const bool pass = usable && derr < tol;
  summary["pass"] = pass;
  run["verify"] = summary;

  std::printf("discrete relative L2 error %s (tolerance %s): %s\n", format_double(derr).c_str(),
              format_double(tol).c_str(), pass ? "PASS" : "FAIL");
  if (summary.contains("continuous_error"))
    std::printf("continuous relative L2 error %s\n", format_double(summary["continuous_error"]).c_str());
  if (disc.status() == RunStatus::Diverged) return run.finish(kDiverged);
  return run.finish(pass ? kOk : kMaxSteps);
}

int cmd_stability(const Options& opt, const Problem& p) {
  std::vector<SweepSolver> solvers = {SweepSolver::Forward};
  if (opt.method.empty()) {
    solvers.push_back(SweepSolver::DiscreteAdjoint);
    solvers.push_back(SweepSolver::ContinuousAdjoint);
  } else {
    solvers.push_back(parse_adjoint_method(opt.method) == AdjointMethod::Discrete ? SweepSolver::DiscreteAdjoint
                                                                                  : SweepSolver::ContinuousAdjoint);
  }
  Run run("stability", opt, p.data());
  const long cap = p.config().stability_iter_cap;
  run["iter_cap"] = cap;
  CsvTable sweep({"tau", "solver", "u_max"});
  CsvTable probes({"solver", "u_in", "stable", "status", "steps"});
  json results = json::array();
  bool bracketed = true;
  Clock clock;
  for (SweepSolver s : solvers) {
    const StabilityResult r = stability_sweep(p.config(), s, cap, 0.0, 0.5);
    run.time(std::string(to_string(s)), clock.lap());
    sweep.add({r.tau, std::string(to_string(s)), r.u_max});
    for (const StabilityProbe& pr : r.probes)
      probes.add({std::string(to_string(s)), pr.u_in, static_cast<long>(pr.stable), std::string(to_string(pr.status)),
                  pr.steps});
    results.push_back({{"solver", to_string(s)}, {"u_max", r.u_max}, {"bracketed", r.bracketed}});
    bracketed = bracketed && r.bracketed;
    std::printf("%-10s u_max %s%s\n", std::string(to_string(s)).c_str(), format_double(r.u_max).c_str(),
                r.bracketed ? "" : " (no stable/unstable bracket in [0, 0.5])");
  }
  run.write("stability.csv", sweep.str());
  run.write("probes.csv", probes.str());
  run["stability"] = results;
  return run.finish(bracketed ? kOk : kDiverged);
}

int cmd_optimize(const Options& opt, const Problem& p) {
  const AdjointMethod method = method_or(opt, AdjointMethod::Discrete);
  Run run("optimize", opt, p.data());
  run["method"] = to_string(method);
  const GridGeometry& g = p.data().geometry;
  CsvTable hist({"iteration", "objective", "G", "lambda", "volume_fraction", "changed", "step", "forward_steps",
                 "adjoint_steps", "forward_status", "adjoint_status"});
  auto record = [&](const IterationRecord& r) {
    hist.add({static_cast<long>(r.iteration), r.objective, r.G, r.lambda, r.volume_fraction,
              static_cast<long>(r.changed), r.step, r.forward_steps, r.adjoint_steps,
              std::string(to_string(r.forward_status)), std::string(to_string(r.adjoint_status))});
    // partial history survives a divergence or an interrupted run
    write_atomic(fs::path(opt.out) / "history.csv", hist.str());
  };
  const IterationObserver observer = [&](const IterationRecord& r, const DesignState& d, const ForwardState& s) {
    record(r);
    char name[32];
    std::snprintf(name, sizeof name, "design_%04d.vtk", r.iteration);
    std::vector<VtkField> fields = forward_fields(s);
    fields.push_back({"phi_next", d.phi});
    fields.push_back({"alpha_next", d.alpha});
    run.write(name, vtk_structured_points(g, fields, "lbtopo design"));
    std::printf("iter %4d  J %.10e  G %+.3e  changed %ld\n", r.iteration, r.objective, r.G,
                static_cast<long>(r.changed));
    std::fflush(stdout);
  };
  Clock clock;
  const OptimizationRun res = optimize(p, method, p.config().max_iterations, observer);
  run.time("optimize", clock.lap());
  run.write("history.csv", hist.str());
  run.write("design_final.vtk", vtk_structured_points(g, {{"alpha", res.design.alpha}, {"phi", res.design.phi}}));

  const double G = volume_constraint(res.design, p.config().Vmax);
  run["optimize"] = {{"status", to_string(res.status)},
                     {"iterations", res.history.size()},
                     {"baseline_objective", res.baseline_objective},
                     {"final_objective", res.history.empty() ? json(nullptr) : json(res.history.back().objective)},
                     {"G", G},
                     {"volume_fraction", res.design.alpha.sum() / static_cast<double>(res.design.size())},
                     {"inlet_outlet_connected", inlet_outlet_connected(p.roles(), res.design.alpha)}};
  std::printf("optimize %s after %zu iterations\n", std::string(to_string(res.status)).c_str(), res.history.size());
  switch (res.status) {
    case OptimizeStatus::DesignSettled:
    case OptimizeStatus::ObjectivePlateau:
      return run.finish(kOk);
    case OptimizeStatus::IterationCap:
      return run.finish(kMaxSteps);
    default:
      return run.finish(kDiverged);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Boltzmann topology optimization with continuous and discrete adjoints"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "case file (.json or .toml)")->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads (0: config value, else all cores)");
  };
  auto method = [&](CLI::App* sub) {
    sub->add_option("--method", opt.method, "adjoint method: continuous or discrete");
  };
  CLI::App* fwd = app.add_subcommand("forward", "steady forward solve");
  common(fwd);
  CLI::App* adj = app.add_subcommand("adjoint", "forward plus adjoint solve and sensitivity");
  common(adj);
  method(adj);
  CLI::App* ver = app.add_subcommand("verify", "compare adjoint sensitivities with finite differences");
  common(ver);
  ver->add_option("--nodes", opt.nodes, "flat indices, x:y[:z], or diag:N, comma separated")->capture_default_str();
  ver->add_option("--fdm-step", opt.fdm_step, "finite-difference step in alpha");
  CLI::App* stab = app.add_subcommand("stability", "maximum stable inlet speed by bisection");
  common(stab);
  method(stab);
  CLI::App* optz = app.add_subcommand("optimize", "level-set topology optimization");
  common(optz);
  method(optz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    CaseConfig config = load_config(opt.config);
    const int threads = opt.threads > 0 ? opt.threads : config.threads;
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    if (!opt.method.empty()) parse_adjoint_method(opt.method);
    const Problem problem(config);
    CLI::App* sub = app.get_subcommands().front();
    if (sub == fwd) return cmd_forward(opt, problem);
    if (sub == adj) return cmd_adjoint(opt, problem);
    if (sub == ver) return cmd_verify(opt, problem);
    if (sub == stab) return cmd_stability(opt, problem);
    return cmd_optimize(opt, problem);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
