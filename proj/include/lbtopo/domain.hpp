#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lbtopo/lattice.hpp"

namespace lbtopo {

using Index = Eigen::Index;

/// Cartesian node grid; node n = x + nx (y + ny z). A 2D grid has nz = 1.
class GridGeometry {
 public:
  GridGeometry() = default;
  GridGeometry(int nx, int ny, int nz = 1);

  [[nodiscard]] int nx() const { return dims_[0]; }
  [[nodiscard]] int ny() const { return dims_[1]; }
  [[nodiscard]] int nz() const { return dims_[2]; }
  [[nodiscard]] int extent(int axis) const { return dims_[axis]; }
  [[nodiscard]] const Eigen::Vector3i& dims() const { return dims_; }
  [[nodiscard]] int dim() const { return dims_[2] == 1 ? 2 : 3; }
  [[nodiscard]] Index size() const { return Index(dims_[0]) * dims_[1] * dims_[2]; }

  [[nodiscard]] Index index(int x, int y, int z = 0) const { return x + Index(dims_[0]) * (y + Index(dims_[1]) * z); }
  [[nodiscard]] Index index(const Eigen::Vector3i& c) const { return index(c[0], c[1], c[2]); }
  [[nodiscard]] Eigen::Vector3i coords(Index n) const;
  [[nodiscard]] bool contains(const Eigen::Vector3i& c) const;
  /// Periodic wrap of a coordinate into the grid.
  [[nodiscard]] Eigen::Vector3i wrap(Eigen::Vector3i c) const;

 private:
  Eigen::Vector3i dims_{3, 3, 1};
};

/// Domain faces. axis = face / 2; even faces are the low side.
enum class Face : int { XMin = 0, XMax, YMin, YMax, ZMin, ZMax };

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
/// +1 for low faces (inward normal points up the axis), -1 for high faces.
inline int face_inward(Face f) { return static_cast<int>(f) % 2 == 0 ? 1 : -1; }
std::string_view to_string(Face f);
Face parse_face(std::string_view name);

enum class BoundaryType { Wall, VelocityInlet, PressureInlet, PressureOutlet, Symmetry };
std::string_view to_string(BoundaryType t);
BoundaryType parse_boundary_type(std::string_view name);
inline bool is_open(BoundaryType t) {
  return t == BoundaryType::VelocityInlet || t == BoundaryType::PressureInlet || t == BoundaryType::PressureOutlet;
}

/// Axis-aligned patch on a face. lo/hi are half-open node ranges along the two
/// tangential axes in increasing axis order (for a z face: x then y). In 2D the
/// second range is ignored.
struct BoundarySegment {
  Face face = Face::XMin;
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 1};
  BoundaryType type = BoundaryType::Wall;
  /// u_in for velocity inlets, density for pressure inlets and outlets.
  double value = 0.0;
};

using BoundarySpec = std::vector<BoundarySegment>;

enum class NodeRole : std::uint8_t { Interior, Wall, Inlet, Outlet, Symmetry };
std::string_view to_string(NodeRole r);

/// One boundary node and everything its closure needs.
struct BoundaryNode {
  Index node = 0;
  NodeRole role = NodeRole::Wall;
  BoundaryType type = BoundaryType::Wall;
  /// Open-face axis and inward sign (inlet/outlet only).
  int axis = -1;
  int inward = 0;
  double value = 0.0;
  /// Bit f set when the node lies on face f.
  std::uint8_t faces = 0;
  std::uint8_t wall_faces = 0;
  std::uint8_t symmetry_faces = 0;
};

class NodeRoleMap {
 public:
  GridGeometry geometry;
  std::vector<NodeRole> roles;
  std::vector<BoundaryNode> boundary;
  /// Per node: position in `boundary`, or -1.
  std::vector<int> boundary_slot;
  std::vector<Index> inlet_nodes;
  std::vector<Index> outlet_nodes;

  [[nodiscard]] NodeRole role(Index n) const { return roles[static_cast<std::size_t>(n)]; }
  [[nodiscard]] int inlet_count() const { return static_cast<int>(inlet_nodes.size()); }
  /// Inlet boundary measure in lattice units (unit spacing, so equal to N_in).
  [[nodiscard]] double inlet_area() const { return static_cast<double>(inlet_nodes.size()); }
};

/// Builds the role map. Unlisted face nodes are walls. Nodes on several faces:
/// any wall face or two open faces makes a wall; one open face plus symmetry
/// faces keeps the open role; symmetry faces only give a symmetry node.
NodeRoleMap classify_nodes(const GridGeometry& geometry, const BoundarySpec& spec);

struct DesignState {
  Eigen::VectorXd alpha;
  Eigen::VectorXd phi;
  /// 1 where the optimizer may change the node.
  Eigen::Array<bool, Eigen::Dynamic, 1> designable;

  [[nodiscard]] Index size() const { return alpha.size(); }
  [[nodiscard]] Index designable_count() const { return designable.count(); }
};

/// All-fluid design with φ = phi0 on designable nodes.
DesignState make_design(Index n, const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, double phi0 = 1.0);

/// α = 1 where φ ≥ 0, 0 where φ < 0, on designable nodes only.
DesignState map_levelset_to_design(DesignState state);

/// G = Σ α_j − V_max N over the designable region.
double volume_constraint(const DesignState& state, double vmax);

enum class CaseKind { Channel2D, PipeBend2D, PipeBend3D, HeatSink3D };
std::string_view to_string(CaseKind k);
CaseKind parse_case_kind(std::string_view name);

/// Physical and algorithmic parameters, lattice units throughout. Field names
/// are the config-file keys.
struct CaseConfig {
  CaseKind case_kind = CaseKind::PipeBend2D;
  int nx = 100;
  int ny = 100;
  int nz = 1;

  double tau = 0.8;
  double rho0 = 1.0;
  std::optional<double> u_in;
  std::optional<double> p1;
  std::optional<double> p0;
  /// When set, overrides u_in (or p1 for pressure-driven cases).
  std::optional<double> Re;

  double Vmax = 0.08 * 3.14159265358979323846;
  double K = 1.0;
  double sigma = 5e-3;
  double dxi = 0.1;
  double max_phi_change = 0.1;
  /// Exponent scale for the volume multiplier; see optimizer.
  double lambda_sharpness = 0.05;

  double Pr = 7.1;
  double beta_max = 1e-5;
  double conductivity_ratio = 100.0;
  std::optional<double> tau_g_fluid;
  std::optional<double> tau_g_solid;

  double forward_tol = 1e-8;
  double adjoint_tol = 1e-8;
  long max_steps = 200000;
  long stability_iter_cap = 20000;
  int window = 100;
  double adjoint_divergence_limit = 1e8;
  /// Steady solves average successive states once per window (see RunOptions).
  bool pair_average = true;

  int max_iterations = 200;
  double fdm_step = 1e-3;
  /// verify passes when the discrete-adjoint relative L2 error is below this.
  double verify_tol = 1e-3;
  /// "secant" (α = 1 minus α = 0 equilibrium difference) or "tangent" (exact ∂f^eq/∂α).
  std::string sensitivity_form = "secant";

  /// Open-patch spans as fractions of the face extent.
  double port_lo = 0.7;
  double port_hi = 0.9;
  /// Heat sink: inlet/outlet patch size as a fraction of the quarter-domain face.
  double port_fraction = 0.5;

  int threads = 0;

  /// Throws ConfigError on an invariant violation.
  void validate() const;

  [[nodiscard]] double nu() const { return (tau - 0.5) / 3.0; }
  [[nodiscard]] double thermal_tau_fluid() const;
  [[nodiscard]] double thermal_tau_solid() const;
  [[nodiscard]] bool pressure_driven() const { return case_kind == CaseKind::HeatSink3D || (p1.has_value() && !u_in); }
};

}  // namespace lbtopo
