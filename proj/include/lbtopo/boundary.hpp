#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCore>

#include "lbtopo/field.hpp"

namespace lbtopo {

enum class BoundaryPhysics { Flow, Thermal };

/// How one post-boundary population of a boundary node is produced.
enum class LinkAction : std::uint8_t {
  Keep,        ///< streamed value kept
  BounceBack,  ///< halfway bounce-back, read from the wrapped slot
  Specular,    ///< on-node mirror across symmetry faces
  Open,        ///< set by the inlet/outlet closure
};

/// Boundary map f = B f_S + b for one population family.
///
/// Flow: Zou-He velocity/pressure closures on open faces (with the 2D transverse
/// correction), halfway bounce-back on walls, specular reflection on symmetry
/// planes. Thermal: anti-bounce-back inlet temperature, zero-gradient outlet,
/// adiabatic bounce-back walls, specular symmetry.
class BoundaryOperator {
 public:
  BoundaryOperator(LatticePtr lattice, const NodeRoleMap& roles, BoundaryPhysics physics, double rho0 = 1.0,
                   double inlet_temperature = 0.0);

  [[nodiscard]] const Lattice& lattice() const { return *lattice_; }
  [[nodiscard]] const LatticePtr& lattice_ptr() const { return lattice_; }
  [[nodiscard]] const std::vector<BoundaryNode>& nodes() const { return nodes_; }
  [[nodiscard]] BoundaryPhysics physics() const { return physics_; }
  [[nodiscard]] LinkAction action(std::size_t b, int i) const { return plans_[b * q_ + static_cast<std::size_t>(i)].action; }
  [[nodiscard]] int source_direction(std::size_t b, int i) const {
    return plans_[b * q_ + static_cast<std::size_t>(i)].dir;
  }
  /// Direction pointing into the domain across the open face, or -1.
  [[nodiscard]] int inward_direction(std::size_t b) const { return inward_dir_[b]; }
  [[nodiscard]] bool is_unknown_open(std::size_t b, int i) const;

  /// Post-boundary values of boundary node b (all q directions), reading the
  /// streamed field fs (q × N data). With affine = false the prescribed values
  /// (u_in, ρ, T_in) are taken as zero, which leaves the linear part.
  void node_kernel(std::size_t b, const double* fs, double* out, bool affine = true) const;

  /// f holds f_S on entry and B f_S + b on exit. All node outputs are gathered
  /// before any is written, so every read sees f_S.
  void apply(PopulationField& f, bool affine = true) const;

  /// y ← Bᵀ y from the hand-derived transposed closures.
  void apply_transpose(PopulationField& y) const;

 private:
  struct LinkPlan {
    LinkAction action = LinkAction::Keep;
    int dir = 0;
  };

  LatticePtr lattice_;
  std::vector<BoundaryNode> nodes_;
  std::vector<LinkPlan> plans_;
  std::vector<int> inward_dir_;
  std::vector<int> transverse_axis_;
  BoundaryPhysics physics_;
  std::size_t q_;
  double rho0_;
  double inlet_temperature_;
  std::vector<double> zh_coeff_;
  std::vector<int> axis_dir_pos_;
  std::vector<int> axis_dir_neg_;
};

/// Exact Jacobian of the boundary map, built by probing `node_kernel` with unit
/// inputs. Rows are (boundary node, direction), columns are field slots.
class BoundaryJacobian {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit BoundaryJacobian(const BoundaryOperator& op);

  [[nodiscard]] const Matrix& matrix() const { return rows_; }
  /// x ← B x (linear part only).
  void apply(PopulationField& x) const;
  /// y ← Bᵀ y.
  void apply_transpose(PopulationField& y) const;
  /// Local q × q block of node b restricted to its own slots.
  [[nodiscard]] Eigen::MatrixXd local_block(std::size_t b) const;

 private:
  LatticePtr lattice_;
  Matrix rows_;
  std::vector<Index> node_of_row_;
};

/// Largest |(Bᵀ y)_fast − (Bᵀ y)_mechanical| over `trials` random fields.
/// Throws std::logic_error naming role and direction when it exceeds tol.
double check_transpose_fast_path(const BoundaryOperator& op, const BoundaryJacobian& jac, int trials,
                                 unsigned seed, double tol = 1e-13);

}  // namespace lbtopo
