#pragma once

#include <optional>

#include "lbtopo/cases.hpp"
#include "lbtopo/forward.hpp"

namespace lbtopo {

/// Inlet pressure mean J = (1/(3 N_in)) Σ_inlet ρ.
double objective_pipebend(const MacroFields& macro, const NodeRoleMap& roles);

/// Heat-sink objective J = −Σ β'(α)(1 − T).
double objective_heatsink(const Eigen::VectorXd& T, const Eigen::VectorXd& alpha, double beta_max);

/// ∂J/∂f_i per node for the pipe-bend objective (same for every direction).
Eigen::VectorXd pipebend_objective_weights(const NodeRoleMap& roles);

/// Forward solution of one design: flow, plus temperature for thermal cases.
struct ForwardState {
  FlowSolver flow;
  std::optional<ThermalSolver> thermal;
  RunResult flow_run;
  RunResult thermal_run;
  double objective = 0.0;

  /// Diverged beats max-steps beats converged.
  [[nodiscard]] RunStatus status() const;
  [[nodiscard]] long steps() const { return flow_run.steps + thermal_run.steps; }
};

/// A built case plus the solver settings taken from its config.
class Problem {
 public:
  explicit Problem(Case c);
  explicit Problem(const CaseConfig& config) : Problem(build_case(config)) {}

  [[nodiscard]] const Case& data() const { return case_; }
  [[nodiscard]] const CaseConfig& config() const { return case_.config; }
  [[nodiscard]] const NodeRoleMap& roles() const { return case_.roles; }
  [[nodiscard]] const LatticePtr& flow_lattice() const { return flow_lattice_; }
  [[nodiscard]] const LatticePtr& thermal_lattice() const { return thermal_lattice_; }
  [[nodiscard]] bool thermal() const { return case_.thermal; }
  [[nodiscard]] ThermalParams thermal_params() const;
  [[nodiscard]] RunOptions forward_options() const;
  [[nodiscard]] RunOptions adjoint_options() const;

  /// Fresh state at rest for the design α.
  [[nodiscard]] ForwardState make_state(const Eigen::VectorXd& alpha) const;
  /// Runs flow to steady, then temperature with the frozen velocity, and
  /// evaluates the objective. min_steps applies to each stage.
  void solve(ForwardState& state, long min_steps = 0) const;
  [[nodiscard]] ForwardState solve(const Eigen::VectorXd& alpha) const;
  /// Warm start from `from` with a new design.
  [[nodiscard]] ForwardState resolve(const ForwardState& from, const Eigen::VectorXd& alpha, long min_steps = 0) const;

  [[nodiscard]] double objective(const ForwardState& state) const;

 private:
  Case case_;
  LatticePtr flow_lattice_;
  LatticePtr thermal_lattice_;
};

}  // namespace lbtopo
