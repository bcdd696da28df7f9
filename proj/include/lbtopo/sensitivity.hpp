#pragma once

#include <string_view>
#include <vector>

#include "lbtopo/adjoint_continuous.hpp"
#include "lbtopo/adjoint_discrete.hpp"
#include "lbtopo/problem.hpp"

namespace lbtopo {

/// Which ∂f^eq/∂α enters J'_W.
///   Secant:  ω ρ0 [3 e·u + 9/2 (e·u)² − 3/2 u²], the α = 1 minus α = 0 secant.
///   Tangent: ω ρ0 [3 e·u + 9α (e·u)² − 3α u²], the exact derivative at α.
enum class SensitivityForm { Secant, Tangent };
std::string_view to_string(SensitivityForm f);
SensitivityForm parse_sensitivity_form(std::string_view name);

/// ∂f_i^eq/∂α for one node in the chosen form.
template <typename Scalar>
Scalar equilibrium_alpha_derivative(const Eigen::Vector3i& e, const Eigen::Matrix<Scalar, 3, 1>& u, Scalar alpha,
                                    Scalar w, Scalar rho0, SensitivityForm form) {
  if (form == SensitivityForm::Tangent) return equilibrium_alpha_tangent(e, u, alpha, w, rho0);
  return w * rho0 * equilibrium_bracket(e, u);
}

/// J'_W = −(1/τ) Σ_i a_i ∂f_i^eq/∂α per node. Both adjoint methods call this;
/// they differ only in the field a they pass.
Eigen::VectorXd sensitivity_kernel(const Lattice& lat, const PopulationField& a, const Eigen::Matrix3Xd& u,
                                   const Eigen::VectorXd& alpha, double tau, double rho0, SensitivityForm form);

/// Continuous method: reads the post-boundary adjoint f*.
Eigen::VectorXd sensitivity_continuous(const ContinuousFlowAdjoint& adj, const FlowSolver& forward,
                                       SensitivityForm form = SensitivityForm::Secant);

/// Discrete method: reads the post-streaming adjoint f_S*.
Eigen::VectorXd sensitivity_discrete(const DiscreteFlowAdjoint& adj, const FlowSolver& forward,
                                     SensitivityForm form = SensitivityForm::Secant);

/// Temperature part of the heat-sink sensitivity per node:
/// β_max(1 − T)(1 + Σ ω g_S*) − (r T / cs2) Σ ω e·u g_S* + (1/τ_f − 1/τ_s) Σ (g − g^eq) g_S*.
Eigen::VectorXd sensitivity_thermal(const DiscreteThermalAdjoint& adj, const ThermalSolver& forward);

/// ∇²φ with 5-point (2D) or 7-point (3D) differences; a missing neighbour
/// across a domain face mirrors the node itself.
Eigen::VectorXd laplacian_phi(const Eigen::VectorXd& phi, const GridGeometry& geometry);

/// λ = exp(G / scale) · mean over designable nodes of |J'_W − σ∇²φ|.
/// scale = 1 leaves G unscaled.
double lagrange_multiplier(const Eigen::VectorXd& jw, const Eigen::VectorXd& phi,
                           const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, const GridGeometry& geometry,
                           double sigma, double G, double scale = 1.0);

struct FdmOptions {
  double h = 1e-3;
  /// Relative window change of the ± difference field that ends a probe.
  double tol = 1e-8;
  long max_steps = 400000;
  int window = 100;
  /// Average successive states once per window in both runs.
  bool pair_average = true;
};

struct FdmProbe {
  Index node = 0;
  double derivative = 0.0;
  double j_plus = 0.0;
  double j_minus = 0.0;
  long steps = 0;
  /// Set when a perturbed solve diverged or hit max_steps; excluded from comparisons.
  bool flagged = false;
};

/// Central differences [J(α_j + h) − J(α_j − h)] / 2h about a converged base.
///
/// Both perturbed states start from the base populations and are stepped in
/// lockstep; a probe ends when the difference of their observed fields (u, then
/// T) stops changing. Steady error common to both runs cancels in the difference.
std::vector<FdmProbe> fdm_oracle(const Problem& problem, const ForwardState& base, const std::vector<Index>& nodes,
                                 const FdmOptions& options);

/// Relative L2 error ‖a − b‖ / ‖b‖ over entries whose probe is not flagged.
double relative_l2_error(const Eigen::VectorXd& estimate, const std::vector<FdmProbe>& reference);

/// Up to `count` distinct designable nodes on the x-y diagonal of the grid,
/// evenly spaced between the fractions lo and hi; 3D grids use the plane
/// z = z_frac (nz − 1).
std::vector<Index> diagonal_nodes(const Case& c, int count, double lo = 0.1, double hi = 0.9, double z_frac = 0.5);

}  // namespace lbtopo
