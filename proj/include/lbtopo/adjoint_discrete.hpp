#pragma once

#include <memory>

#include "lbtopo/boundary.hpp"
#include "lbtopo/forward.hpp"

namespace lbtopo {

struct AdjointRunOptions {
  double tol = 1e-8;
  long max_steps = 200000;
  int window = 100;
  long min_steps = 0;
  /// See RunOptions::pair_average.
  bool pair_average = false;
  /// ‖·‖∞ above this (or any non-finite value) counts as divergence.
  double divergence_limit = 1e8;
};

/// Which Bᵀ the adjoint step applies: the hand-derived closures or the
/// transposed probed Jacobian.
enum class BoundaryTranspose { Fast, Mechanical };

/// Discrete adjoint of the steady flow solve, iterated as
/// f* = Bᵀ f_C*, f_S* = Sᵀ f*, f_C* = Cᵀ f_S* − ∂J/∂f (+ coupling).
///
/// The forward state is frozen at construction.
class DiscreteFlowAdjoint {
 public:
  /// objective_weights holds ∂J/∂f_i per node (the same for all i); pass an
  /// empty vector for none. With check_boundary the fast path is compared
  /// against the mechanical transpose once, throwing on mismatch.
  DiscreteFlowAdjoint(const FlowSolver& forward, Eigen::VectorXd objective_weights,
                      BoundaryTranspose path = BoundaryTranspose::Fast, bool check_boundary = true);

  /// Extra per-direction source added after the adjoint collision (thermal coupling).
  void set_coupling(PopulationField coupling);
  void reset();
  void step();
  RunResult run(const AdjointRunOptions& options);

  [[nodiscard]] const PopulationField& fstar_C() const { return y_; }
  [[nodiscard]] const PopulationField& fstar() const { return fstar_; }
  [[nodiscard]] const PopulationField& fstar_S() const { return fs_; }
  void set_fstar_C(const PopulationField& y) { y_ = y; }
  [[nodiscard]] bool diverged() const;

  /// y ← Bᵀ y with the selected path.
  void boundary_transpose(PopulationField& y) const;
  /// Cᵀ applied node by node, no source.
  [[nodiscard]] PopulationField collide_transpose(const PopulationField& fs) const;
  [[nodiscard]] const Eigen::Matrix3Xd& velocity() const { return u_; }
  [[nodiscard]] const Lattice& lattice() const { return *lattice_; }
  [[nodiscard]] const BoundaryOperator& boundary() const { return bc_; }
  /// Largest fast-path deviation seen by the setup check (0 when skipped).
  [[nodiscard]] double boundary_check_error() const { return check_error_; }

 private:
  LatticePtr lattice_;
  BoundaryOperator bc_;
  std::shared_ptr<const BoundaryJacobian> jacobian_;
  BoundaryTranspose path_;
  Eigen::VectorXd alpha_;
  Eigen::Matrix3Xd u_;
  double tau_;
  Eigen::VectorXd weights_;
  PopulationField coupling_;
  PopulationField y_;
  PopulationField fstar_;
  PopulationField fs_;
  double limit_ = 1e8;
  double check_error_ = 0.0;
};

/// Discrete adjoint of the steady temperature solve with ∂J/∂g_i = β'(α).
class DiscreteThermalAdjoint {
 public:
  DiscreteThermalAdjoint(const ThermalSolver& forward, BoundaryTranspose path = BoundaryTranspose::Fast,
                         bool check_boundary = true);

  void reset();
  void step();
  RunResult run(const AdjointRunOptions& options);

  [[nodiscard]] const PopulationField& gstar_C() const { return y_; }
  [[nodiscard]] const PopulationField& gstar() const { return gstar_; }
  [[nodiscard]] const PopulationField& gstar_S() const { return gs_; }
  [[nodiscard]] bool diverged() const;

  void boundary_transpose(PopulationField& y) const;
  [[nodiscard]] PopulationField collide_transpose(const PopulationField& gs) const;
  [[nodiscard]] const Lattice& lattice() const { return *lattice_; }
  [[nodiscard]] const BoundaryOperator& boundary() const { return bc_; }
  [[nodiscard]] double boundary_check_error() const { return check_error_; }

 private:
  LatticePtr lattice_;
  BoundaryOperator bc_;
  std::shared_ptr<const BoundaryJacobian> jacobian_;
  BoundaryTranspose path_;
  Eigen::VectorXd alpha_;
  Eigen::Matrix3Xd u_;
  Eigen::VectorXd rate_;
  Eigen::VectorXd beta_;
  PopulationField y_;
  PopulationField gstar_;
  PopulationField gs_;
  double limit_ = 1e8;
  double check_error_ = 0.0;
};

/// Flow-adjoint source from the temperature equation,
/// c_i = r(α) Σ_m ω_m T α (e_m·e_i) g_S,m* / (cs2 ρ0), on the flow stencil.
PopulationField flow_adjoint_coupling(const Lattice& flow, const Lattice& thermal, const PopulationField& gstar_S,
                                      const Eigen::VectorXd& T, const Eigen::VectorXd& alpha, const ThermalParams& params,
                                      double rho0);

}  // namespace lbtopo
