#include "lbtopo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace lbtopo {

std::string_view to_string(AdjointMethod m) { return m == AdjointMethod::Continuous ? "continuous" : "discrete"; }

AdjointMethod parse_adjoint_method(std::string_view name) {
  if (name == "continuous") return AdjointMethod::Continuous;
  if (name == "discrete") return AdjointMethod::Discrete;
  throw ConfigError("method must be continuous or discrete");
}

AdjointRunOptions adjoint_run_options(const CaseConfig& config) {
  AdjointRunOptions o;
  o.tol = config.adjoint_tol;
  o.max_steps = config.max_steps;
  o.window = config.window;
  o.divergence_limit = config.adjoint_divergence_limit;
  o.pair_average = config.pair_average;
  return o;
}

RunStatus SensitivityResult::status() const {
  if (flow_adjoint.status == RunStatus::Diverged || thermal_adjoint.status == RunStatus::Diverged)
    return RunStatus::Diverged;
  if (flow_adjoint.status == RunStatus::MaxSteps || thermal_adjoint.status == RunStatus::MaxSteps)
    return RunStatus::MaxSteps;
  return RunStatus::Converged;
}

SensitivityResult solve_sensitivity(const Problem& problem, const ForwardState& state, AdjointMethod method) {
  const CaseConfig& cfg = problem.config();
  const SensitivityForm form = parse_sensitivity_form(cfg.sensitivity_form);
  const AdjointRunOptions opt = adjoint_run_options(cfg);
  SensitivityResult out;
  out.method = method;
  out.thermal_adjoint.status = RunStatus::Converged;

  if (problem.thermal()) {
    if (method != AdjointMethod::Discrete) throw ConfigError("heat sink cases need the discrete adjoint");
    const ThermalSolver& th = *state.thermal;
    DiscreteThermalAdjoint tad(th);
    out.thermal_adjoint = tad.run(opt);
    DiscreteFlowAdjoint fad(state.flow, Eigen::VectorXd());
    if (out.thermal_adjoint.status != RunStatus::Diverged) {
      fad.set_coupling(flow_adjoint_coupling(state.flow.lattice(), th.lattice(), tad.gstar_S(), th.temperature(),
                                             state.flow.alpha(), th.params(), state.flow.rho0()));
      out.flow_adjoint = fad.run(opt);
    } else {
      out.flow_adjoint.status = RunStatus::Diverged;
    }
    out.jw = sensitivity_discrete(fad, state.flow, form) + sensitivity_thermal(tad, th);
    out.adjoint_field = fad.fstar_S();
    return out;
  }

  if (method == AdjointMethod::Discrete) {
    DiscreteFlowAdjoint fad(state.flow, pipebend_objective_weights(problem.roles()));
    out.flow_adjoint = fad.run(opt);
    out.jw = sensitivity_discrete(fad, state.flow, form);
    out.adjoint_field = fad.fstar_S();
  } else {
    const double s = 2.0 / (3.0 * problem.roles().inlet_area());
    ContinuousFlowAdjoint cad(state.flow, problem.roles(), s);
    out.flow_adjoint = cad.run(opt);
    out.jw = sensitivity_continuous(cad, state.flow, form);
    out.inconsistency = cad.inconsistency_history();
    out.adjoint_field = cad.fstar();
  }
  return out;
}

Eigen::VectorXd rd_update(const Eigen::VectorXd& phi, const Eigen::VectorXd& jtotal,
                          const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, const GridGeometry& geometry,
                          double K, double sigma, double dxi) {
  const Eigen::VectorXd lap = laplacian_phi(phi, geometry);
  Eigen::VectorXd out = phi;
  for (Index n = 0; n < phi.size(); ++n) {
    if (!designable[n]) continue;
    out[n] = std::clamp(phi[n] - dxi * K * (jtotal[n] - sigma * lap[n]), -1.0, 1.0);
  }
  return out;
}

bool inlet_outlet_connected(const NodeRoleMap& roles, const Eigen::VectorXd& alpha) {
  const GridGeometry& g = roles.geometry;
  auto passable = [&](Index n) {
    const NodeRole r = roles.role(n);
    if (r == NodeRole::Inlet || r == NodeRole::Outlet) return true;
    return r != NodeRole::Wall && alpha[n] >= 0.5;
  };
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::deque<Index> queue;
  for (Index n : roles.inlet_nodes) {
    seen[static_cast<std::size_t>(n)] = 1;
    queue.push_back(n);
  }
  while (!queue.empty()) {
    const Index n = queue.front();
    queue.pop_front();
    if (roles.role(n) == NodeRole::Outlet) return true;
    const Eigen::Vector3i c = g.coords(n);
    for (int a = 0; a < g.dim(); ++a) {
      for (int sgn : {-1, 1}) {
        Eigen::Vector3i d = c;
        d[a] += sgn;
        if (!g.contains(d)) continue;
        const Index m = g.index(d);
        if (seen[static_cast<std::size_t>(m)] || !passable(m)) continue;
        seen[static_cast<std::size_t>(m)] = 1;
        queue.push_back(m);
      }
    }
  }
  return false;
}

std::string_view to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::DesignSettled: return "design_settled";
    case OptimizeStatus::ObjectivePlateau: return "objective_plateau";
    case OptimizeStatus::IterationCap: return "iteration_cap";
    case OptimizeStatus::ForwardDiverged: return "forward_diverged";
    case OptimizeStatus::AdjointDiverged: return "adjoint_diverged";
  }
  return "unknown";
}

OptimizationRun optimize(const Problem& problem, AdjointMethod method, int max_iterations,
                         const IterationObserver& observer) {
  const CaseConfig& cfg = problem.config();
  const GridGeometry& geom = problem.data().geometry;
  OptimizationRun run;
  run.method = method;
  run.design = problem.data().design;
  const auto& mask = run.design.designable;
  const double n_design = static_cast<double>(std::max<Index>(run.design.designable_count(), 1));
  // lambda_sharpness = 0 keeps the unscaled exponent exp(G).
  const double g_scale = cfg.lambda_sharpness > 0.0 ? cfg.lambda_sharpness * n_design : 1.0;

  ForwardState state = problem.solve(run.design.alpha);
  run.baseline_objective = state.objective;
  // Stop rules only count once some node has flipped; φ starts at 1 and the
  // first iterations move it without changing α.
  int first_change = -1;
  int quiet = 0;

  for (int it = 0; it < max_iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.objective = state.objective;
    rec.forward_steps = state.steps();
    rec.forward_status = state.status();
    rec.G = volume_constraint(run.design, cfg.Vmax);
    double vol = 0.0;
    for (Index n = 0; n < mask.size(); ++n)
      if (mask[n]) vol += run.design.alpha[n];
    rec.volume_fraction = vol / n_design;

    if (rec.forward_status == RunStatus::Diverged) {
      run.history.push_back(rec);
      run.status = OptimizeStatus::ForwardDiverged;
      if (observer) observer(rec, run.design, state);
      return run;
    }

    SensitivityResult sens = solve_sensitivity(problem, state, method);
    rec.adjoint_steps = sens.flow_adjoint.steps + sens.thermal_adjoint.steps;
    rec.adjoint_status = sens.status();
    if (rec.adjoint_status == RunStatus::Diverged) {
      run.history.push_back(rec);
      run.status = OptimizeStatus::AdjointDiverged;
      if (observer) observer(rec, run.design, state);
      return run;
    }

    Eigen::VectorXd jw = sens.jw;
    double jmax = 0.0;
    for (Index n = 0; n < jw.size(); ++n)
      if (mask[n]) jmax = std::max(jmax, std::abs(jw[n]));
    if (jmax > 0.0) jw /= jmax;

    const Eigen::VectorXd lap = laplacian_phi(run.design.phi, geom);
    double rmax = 0.0;
    for (Index n = 0; n < jw.size(); ++n)
      if (mask[n]) rmax = std::max(rmax, std::abs(jw[n] - cfg.sigma * lap[n]));
    rec.lambda = std::min(lagrange_multiplier(jw, run.design.phi, mask, geom, cfg.sigma, rec.G, g_scale), rmax);

    const Eigen::VectorXd jtotal = jw.array() + rec.lambda;
    double drive = 0.0;
    for (Index n = 0; n < jw.size(); ++n)
      if (mask[n]) drive = std::max(drive, std::abs(jtotal[n] - cfg.sigma * lap[n]));
    rec.step = cfg.dxi;
    if (drive * cfg.K * rec.step > cfg.max_phi_change) rec.step = cfg.max_phi_change / (drive * cfg.K);

    DesignState next = run.design;
    next.phi = rd_update(run.design.phi, jtotal, mask, geom, cfg.K, cfg.sigma, rec.step);
    next = map_levelset_to_design(std::move(next));
    rec.changed = (next.alpha.array() != run.design.alpha.array()).count();
    run.design = std::move(next);
    run.history.push_back(rec);
    if (observer) observer(rec, run.design, state);

    if (rec.changed > 0 && first_change < 0) first_change = it;
    quiet = rec.changed == 0 ? quiet + 1 : 0;
    if (first_change >= 0 && quiet >= 5) {
      run.status = OptimizeStatus::DesignSettled;
      return run;
    }
    if (first_change >= 0 && it - first_change > 10) {
      const double j_old = run.history[run.history.size() - 11].objective;
      const double denom = std::max(std::abs(rec.objective), 1e-300);
      if (std::abs(rec.objective - j_old) / denom < 1e-5) {
        run.status = OptimizeStatus::ObjectivePlateau;
        return run;
      }
    }
    if (it + 1 < max_iterations) state = problem.resolve(state, run.design.alpha);
  }
  run.status = OptimizeStatus::IterationCap;
  return run;
}

std::string_view to_string(SweepSolver s) {
  switch (s) {
    case SweepSolver::Forward: return "forward";
    case SweepSolver::ContinuousAdjoint: return "continuous";
    case SweepSolver::DiscreteAdjoint: return "discrete";
  }
  return "unknown";
}

SweepSolver parse_sweep_solver(std::string_view name) {
  if (name == "forward") return SweepSolver::Forward;
  if (name == "continuous") return SweepSolver::ContinuousAdjoint;
  if (name == "discrete") return SweepSolver::DiscreteAdjoint;
  throw ConfigError("sweep solver must be forward, continuous or discrete");
}

StabilityProbe stability_probe(const CaseConfig& config, SweepSolver solver, double u, long iter_cap) {
  CaseConfig cfg = config;
  if (cfg.pressure_driven()) throw ConfigError("stability sweep needs a velocity inlet");
  cfg.Re.reset();
  cfg.u_in = u;
  cfg.max_steps = iter_cap;
  cfg.pair_average = false;
  const Problem problem(cfg);
  StabilityProbe probe;
  probe.u_in = u;
  ForwardState state = problem.solve(problem.data().design.alpha);
  probe.steps = state.steps();
  probe.status = state.status();
  if (probe.status != RunStatus::Diverged && solver != SweepSolver::Forward) {
    AdjointRunOptions opt = adjoint_run_options(cfg);
    opt.max_steps = iter_cap;
    RunResult r;
    if (solver == SweepSolver::DiscreteAdjoint) {
      DiscreteFlowAdjoint adj(state.flow, pipebend_objective_weights(problem.roles()));
      r = adj.run(opt);
    } else {
      ContinuousFlowAdjoint adj(state.flow, problem.roles(), 2.0 / (3.0 * problem.roles().inlet_area()));
      r = adj.run(opt);
    }
    probe.steps = r.steps;
    probe.status = r.status;
  }
  probe.stable = probe.status != RunStatus::Diverged;
  return probe;
}

StabilityResult stability_sweep(const CaseConfig& config, SweepSolver solver, long iter_cap, double lo, double hi,
                                double width) {
  if (!(hi > lo) || !(width > 0.0)) throw ConfigError("stability bracket must satisfy lo < hi and width > 0");
  StabilityResult res;
  res.solver = solver;
  res.tau = config.tau;
  auto probe = [&](double u) {
    res.probes.push_back(stability_probe(config, solver, u, iter_cap));
    return res.probes.back().stable;
  };
  if (!probe(lo)) {
    res.u_max = lo;
    return res;
  }
  if (probe(hi)) {
    res.u_max = hi;
    return res;
  }
  res.bracketed = true;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  res.u_max = lo;
  return res;
}

}  // namespace lbtopo
