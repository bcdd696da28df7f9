#include "lbtopo/problem.hpp"

namespace lbtopo {

double objective_pipebend(const MacroFields& macro, const NodeRoleMap& roles) {
  if (roles.inlet_nodes.empty()) return 0.0;
  double sum = 0.0;
  for (Index n : roles.inlet_nodes) sum += macro.rho[n];
  return sum / (3.0 * roles.inlet_area());
}

double objective_heatsink(const Eigen::VectorXd& T, const Eigen::VectorXd& alpha, double beta_max) {
  double sum = 0.0;
  for (Index n = 0; n < T.size(); ++n) sum += heat_generation(alpha[n], beta_max) * (1.0 - T[n]);
  return -sum;
}

Eigen::VectorXd pipebend_objective_weights(const NodeRoleMap& roles) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(roles.geometry.size());
  for (Index n : roles.inlet_nodes) w[n] = 1.0 / (3.0 * roles.inlet_area());
  return w;
}

RunStatus ForwardState::status() const {
  if (flow_run.status == RunStatus::Diverged || thermal_run.status == RunStatus::Diverged) return RunStatus::Diverged;
  if (flow_run.status == RunStatus::MaxSteps || (thermal && thermal_run.status == RunStatus::MaxSteps))
    return RunStatus::MaxSteps;
  return RunStatus::Converged;
}

Problem::Problem(Case c) : case_(std::move(c)) {
  flow_lattice_ = make_lattice(case_.geometry, case_.flow_stencil);
  if (case_.thermal) thermal_lattice_ = make_lattice(case_.geometry, StencilKind::D3Q7);
}

ThermalParams Problem::thermal_params() const {
  const CaseConfig& c = case_.config;
  return {c.thermal_tau_fluid(), c.thermal_tau_solid(), c.beta_max, 0.0};
}

RunOptions Problem::forward_options() const {
  RunOptions o;
  o.tol = case_.config.forward_tol;
  o.max_steps = case_.config.max_steps;
  o.window = case_.config.window;
  o.pair_average = case_.config.pair_average;
  return o;
}

RunOptions Problem::adjoint_options() const {
  RunOptions o = forward_options();
  o.tol = case_.config.adjoint_tol;
  return o;
}

ForwardState Problem::make_state(const Eigen::VectorXd& alpha) const {
  ForwardState s{FlowSolver(flow_lattice_, case_.roles, case_.config.tau, case_.config.rho0, alpha), std::nullopt, {}, {},
                 0.0};
  if (case_.thermal)
    s.thermal.emplace(thermal_lattice_, case_.roles, thermal_params(), alpha,
                      Eigen::Matrix3Xd::Zero(3, flow_lattice_->size()));
  return s;
}

void Problem::solve(ForwardState& state, long min_steps) const {
  RunOptions opt = forward_options();
  opt.min_steps = min_steps;
  state.flow_run = state.flow.run_to_steady(opt);
  state.thermal_run = {};
  state.thermal_run.status = RunStatus::Converged;
  if (state.thermal && state.flow_run.status != RunStatus::Diverged) {
    state.thermal->set_flow(state.flow.alpha(), state.flow.macros().u);
    state.thermal_run = state.thermal->run_to_steady(opt);
  }
  state.objective = objective(state);
}

ForwardState Problem::solve(const Eigen::VectorXd& alpha) const {
  ForwardState s = make_state(alpha);
  solve(s);
  return s;
}

ForwardState Problem::resolve(const ForwardState& from, const Eigen::VectorXd& alpha, long min_steps) const {
  ForwardState s = from;
  s.flow.set_alpha(alpha);
  if (s.thermal) s.thermal->set_flow(alpha, s.flow.macros().u);
  solve(s, min_steps);
  return s;
}

double Problem::objective(const ForwardState& state) const {
  if (state.thermal)
    return objective_heatsink(state.thermal->temperature(), state.flow.alpha(), case_.config.beta_max);
  return objective_pipebend(state.flow.macros(), case_.roles);
}

}  // namespace lbtopo
