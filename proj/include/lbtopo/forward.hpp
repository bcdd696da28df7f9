#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "lbtopo/boundary.hpp"
#include "lbtopo/field.hpp"
#include "lbtopo/kernels.hpp"

namespace lbtopo {

enum class RunStatus { Converged, MaxSteps, Diverged };
std::string_view to_string(RunStatus s);

struct HistoryRow {
  long step = 0;
  double residual = 0.0;
  double mass = 0.0;
  double objective = 0.0;
};

struct RunResult {
  RunStatus status = RunStatus::MaxSteps;
  long steps = 0;
  long divergence_step = -1;
  std::vector<HistoryRow> history;
};

struct RunOptions {
  double tol = 1e-8;
  long max_steps = 200000;
  int window = 100;
  /// Run at least this many steps before accepting convergence.
  long min_steps = 0;
  /// Damp the period-2 (checkerboard in time) component once per window by
  /// averaging two successive states. Leaves fixed points unchanged; steady
  /// solves only, never stability probes.
  bool pair_average = false;
  /// Optional objective sampled at every window for the history.
  std::function<double()> objective;
};

/// Equilibrium populations for a whole field.
PopulationField equilibrium_field(const Lattice& lat, const Eigen::VectorXd& rho, const Eigen::Matrix3Xd& u,
                                  const Eigen::VectorXd& alpha, double rho0 = 1.0);

/// BGK collision f_C = f − (f − f^eq)/τ, node by node.
PopulationField collide(const Lattice& lat, const PopulationField& f, const Eigen::VectorXd& alpha, double tau,
                        double rho0 = 1.0);

/// f holds the streamed field on entry, the post-boundary field on exit.
inline void apply_flow_boundaries(PopulationField& f, const BoundaryOperator& bc) { bc.apply(f, true); }

/// Relative L2 change ‖a − b‖ / ‖a‖; an RMS change below 1e-14 reads as zero.
double relative_change(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b);

/// BGK flow solver: collide → stream → boundaries.
class FlowSolver {
 public:
  FlowSolver(LatticePtr lattice, const NodeRoleMap& roles, double tau, double rho0, Eigen::VectorXd alpha);

  /// f = f^eq(ρ0, 0; α).
  void initialize();
  void step();
  RunResult run_to_steady(const RunOptions& options);

  [[nodiscard]] MacroFields macros() const { return moments(*lattice_, f_, rho0_); }
  [[nodiscard]] const PopulationField& populations() const { return f_; }
  void set_populations(const PopulationField& f) { f_ = f; }
  [[nodiscard]] const Eigen::VectorXd& alpha() const { return alpha_; }
  void set_alpha(Eigen::VectorXd alpha);
  [[nodiscard]] const BoundaryOperator& boundary() const { return bc_; }
  [[nodiscard]] const Lattice& lattice() const { return *lattice_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] double rho0() const { return rho0_; }
  /// NaN or |ρ − ρ0| > 10 ρ0 anywhere.
  [[nodiscard]] bool diverged() const;

 private:
  LatticePtr lattice_;
  BoundaryOperator bc_;
  double tau_;
  double rho0_;
  Eigen::VectorXd alpha_;
  PopulationField f_;
  PopulationField scratch_;
};

struct ThermalParams {
  double tau_fluid = 0.6;
  double tau_solid = 1.0;
  double beta_max = 0.0;
  double inlet_temperature = 0.0;
};

/// D3Q7 advection-diffusion with the volumetric source β'(α)(1 − T), driven by
/// a frozen flow field.
class ThermalSolver {
 public:
  ThermalSolver(LatticePtr lattice, const NodeRoleMap& roles, ThermalParams params, Eigen::VectorXd alpha,
                Eigen::Matrix3Xd u);

  /// g = g^eq(T = inlet temperature).
  void initialize();
  void step();
  RunResult run_to_steady(const RunOptions& options);

  [[nodiscard]] Eigen::VectorXd temperature() const { return g_.colwise().sum().transpose(); }
  [[nodiscard]] const PopulationField& populations() const { return g_; }
  void set_populations(const PopulationField& g) { g_ = g; }
  [[nodiscard]] const BoundaryOperator& boundary() const { return bc_; }
  [[nodiscard]] const ThermalParams& params() const { return params_; }
  [[nodiscard]] const Eigen::VectorXd& alpha() const { return alpha_; }
  [[nodiscard]] const Eigen::Matrix3Xd& velocity() const { return u_; }
  [[nodiscard]] const Lattice& lattice() const { return *lattice_; }
  /// Swap in a new design and flow field, keeping the populations.
  void set_flow(Eigen::VectorXd alpha, Eigen::Matrix3Xd u);
  [[nodiscard]] bool diverged() const;

 private:
  LatticePtr lattice_;
  BoundaryOperator bc_;
  ThermalParams params_;
  Eigen::VectorXd alpha_;
  Eigen::Matrix3Xd u_;
  PopulationField g_;
  PopulationField scratch_;
};

/// Thermal collision g_C = g − r(α)(g − g^eq) + ω Q for one field (no streaming).
PopulationField thermal_collide(const Lattice& lat, const PopulationField& g, const Eigen::VectorXd& alpha,
                                const Eigen::Matrix3Xd& u, const ThermalParams& params);

}  // namespace lbtopo
