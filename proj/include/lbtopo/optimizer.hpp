#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "lbtopo/sensitivity.hpp"

namespace lbtopo {

enum class AdjointMethod { Continuous, Discrete };
std::string_view to_string(AdjointMethod m);
AdjointMethod parse_adjoint_method(std::string_view name);

AdjointRunOptions adjoint_run_options(const CaseConfig& config);

/// Adjoint solve plus J'_W for one forward state.
struct SensitivityResult {
  AdjointMethod method = AdjointMethod::Discrete;
  Eigen::VectorXd jw;
  RunResult flow_adjoint;
  RunResult thermal_adjoint;
  /// Continuous method only: largest dropped-condition residual per window.
  std::vector<double> inconsistency;
  /// f* (continuous) or f_S* (discrete), kept for output.
  PopulationField adjoint_field;

  [[nodiscard]] RunStatus status() const;
};

/// Heat-sink cases run the thermal adjoint first, then the flow adjoint with
/// the frozen coupling source. Throws ConfigError for continuous + heat sink.
SensitivityResult solve_sensitivity(const Problem& problem, const ForwardState& state, AdjointMethod method);

/// One explicit step φ ← φ − Δξ K (J' − σ∇²φ), clamped to [−1, 1];
/// non-designable nodes keep their value.
Eigen::VectorXd rd_update(const Eigen::VectorXd& phi, const Eigen::VectorXd& jtotal,
                          const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, const GridGeometry& geometry,
                          double K, double sigma, double dxi);

/// True when fluid nodes (α ≥ 0.5) and open nodes link some inlet node to
/// some outlet node through axis neighbours.
bool inlet_outlet_connected(const NodeRoleMap& roles, const Eigen::VectorXd& alpha);

enum class OptimizeStatus { DesignSettled, ObjectivePlateau, IterationCap, ForwardDiverged, AdjointDiverged };
std::string_view to_string(OptimizeStatus s);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double G = 0.0;
  double lambda = 0.0;
  double volume_fraction = 0.0;
  Index changed = 0;
  double step = 0.0;
  long forward_steps = 0;
  long adjoint_steps = 0;
  RunStatus forward_status = RunStatus::Converged;
  RunStatus adjoint_status = RunStatus::Converged;
};

struct OptimizationRun {
  AdjointMethod method = AdjointMethod::Discrete;
  OptimizeStatus status = OptimizeStatus::IterationCap;
  double baseline_objective = 0.0;
  DesignState design;
  std::vector<IterationRecord> history;
};

/// Called after every iteration with the record, the updated design and the
/// forward state the record was computed from.
using IterationObserver = std::function<void(const IterationRecord&, const DesignState&, const ForwardState&)>;

/// Level-set loop: forward → adjoint → J'_W (scaled to max |J'_W| = 1) → λ →
/// reaction-diffusion step → remap. Stops after 5 iterations without design
/// change, a relative J change below 1e-5 across 10 iterations, or the cap.
OptimizationRun optimize(const Problem& problem, AdjointMethod method, int max_iterations,
                         const IterationObserver& observer = {});

enum class SweepSolver { Forward, ContinuousAdjoint, DiscreteAdjoint };
std::string_view to_string(SweepSolver s);
SweepSolver parse_sweep_solver(std::string_view name);

struct StabilityProbe {
  double u_in = 0.0;
  bool stable = false;
  long steps = 0;
  RunStatus status = RunStatus::MaxSteps;
};

struct StabilityResult {
  SweepSolver solver = SweepSolver::Forward;
  double tau = 0.0;
  /// Largest stable u_in found (lower end of the final bracket).
  double u_max = 0.0;
  /// False when the lower bound is unstable or the upper bound is stable.
  bool bracketed = false;
  std::vector<StabilityProbe> probes;
};

/// One probe: iter_cap steps (fewer if converged) of the selected solver on
/// the case with inlet speed u; stable unless it diverges.
StabilityProbe stability_probe(const CaseConfig& config, SweepSolver solver, double u, long iter_cap);

/// Bisection on u_in between lo and hi until hi − lo ≤ width.
StabilityResult stability_sweep(const CaseConfig& config, SweepSolver solver, long iter_cap, double lo, double hi,
                                double width = 1e-3);

}  // namespace lbtopo
