#include "lbtopo/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lbtopo {

GridGeometry::GridGeometry(int nx, int ny, int nz) : dims_(nx, ny, nz) {
  if (nx < 3 || ny < 3 || nz < 1 || nz == 2)
    throw ConfigError("grid extents must be at least 3 (nz = 1 for 2D)");
}

Eigen::Vector3i GridGeometry::coords(Index n) const {
  const int x = static_cast<int>(n % dims_[0]);
  const Index r = n / dims_[0];
  return {x, static_cast<int>(r % dims_[1]), static_cast<int>(r / dims_[1])};
}

bool GridGeometry::contains(const Eigen::Vector3i& c) const {
  return (c.array() >= 0).all() && (c.array() < dims_.array()).all();
}

Eigen::Vector3i GridGeometry::wrap(Eigen::Vector3i c) const {
  for (int a = 0; a < 3; ++a) c[a] = ((c[a] % dims_[a]) + dims_[a]) % dims_[a];
  return c;
}

std::string_view to_string(Face f) {
  constexpr std::array<std::string_view, 6> names{"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  return names[static_cast<std::size_t>(f)];
}

Face parse_face(std::string_view name) {
  for (int f = 0; f < 6; ++f)
    if (to_string(static_cast<Face>(f)) == name) return static_cast<Face>(f);
  throw ConfigError("unknown face '" + std::string(name) + "'");
}

std::string_view to_string(BoundaryType t) {
  switch (t) {
    case BoundaryType::Wall:
      return "wall";
    case BoundaryType::VelocityInlet:
      return "velocity_inlet";
    case BoundaryType::PressureInlet:
      return "pressure_inlet";
    case BoundaryType::PressureOutlet:
      return "pressure_outlet";
    case BoundaryType::Symmetry:
      return "symmetry";
  }
  return "unknown";
}

BoundaryType parse_boundary_type(std::string_view name) {
  for (auto t : {BoundaryType::Wall, BoundaryType::VelocityInlet, BoundaryType::PressureInlet,
                 BoundaryType::PressureOutlet, BoundaryType::Symmetry})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown boundary type '" + std::string(name) + "'");
}

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Interior:
      return "interior";
    case NodeRole::Wall:
      return "wall";
    case NodeRole::Inlet:
      return "inlet";
    case NodeRole::Outlet:
      return "outlet";
    case NodeRole::Symmetry:
      return "symmetry";
  }
  return "unknown";
}

namespace {

struct FaceEntry {
  BoundaryType type;
  double value;
  int segment;
};

std::array<int, 2> tangential_axes(int axis) {
  if (axis == 0) return {1, 2};
  if (axis == 1) return {0, 2};
  return {0, 1};
}

}  // namespace

NodeRoleMap classify_nodes(const GridGeometry& g, const BoundarySpec& spec) {
  const int dim = g.dim();
  // (face, node) -> assigned segment entry
  std::vector<std::map<Index, FaceEntry>> assigned(6);

  for (std::size_t s = 0; s < spec.size(); ++s) {
    const auto& seg = spec[s];
    const int axis = face_axis(seg.face);
    if (axis >= dim) throw ConfigError("segment on face " + std::string(to_string(seg.face)) + " in a 2D grid");
    const auto tang = tangential_axes(axis);
    std::array<int, 2> lo = seg.lo;
    std::array<int, 2> hi = seg.hi;
    if (dim == 2) {
      lo[1] = 0;
      hi[1] = 1;
    }
    for (int k = 0; k < 2; ++k) {
      const int ext = g.extent(tang[static_cast<std::size_t>(k)]);
      if (lo[static_cast<std::size_t>(k)] < 0 || hi[static_cast<std::size_t>(k)] > ext ||
          lo[static_cast<std::size_t>(k)] >= hi[static_cast<std::size_t>(k)]) {
        std::ostringstream msg;
        msg << "segment " << s << " on face " << to_string(seg.face) << " lies outside the grid";
        throw ConfigError(msg.str());
      }
    }
    const int fixed = face_inward(seg.face) > 0 ? 0 : g.extent(axis) - 1;
    for (int b = lo[1]; b < hi[1]; ++b) {
      for (int a = lo[0]; a < hi[0]; ++a) {
        Eigen::Vector3i c = Eigen::Vector3i::Zero();
        c[axis] = fixed;
        c[tang[0]] = a;
        c[tang[1]] = b;
        const Index n = g.index(c);
        auto& slot = assigned[static_cast<std::size_t>(seg.face)];
        const auto it = slot.find(n);
        if (it != slot.end() && (it->second.type != seg.type || it->second.value != seg.value)) {
          std::ostringstream msg;
          msg << "segments " << it->second.segment << " and " << s << " overlap with conflicting roles on face "
              << to_string(seg.face);
          throw ConfigError(msg.str());
        }
        slot[n] = FaceEntry{seg.type, seg.value, static_cast<int>(s)};
      }
    }
  }

  NodeRoleMap map;
  map.geometry = g;
  map.roles.assign(static_cast<std::size_t>(g.size()), NodeRole::Interior);
  map.boundary_slot.assign(static_cast<std::size_t>(g.size()), -1);

  for (Index n = 0; n < g.size(); ++n) {
    const Eigen::Vector3i c = g.coords(n);
    BoundaryNode bn;
    bn.node = n;
    int open_count = 0;
    Face open_face = Face::XMin;
    FaceEntry open_entry{BoundaryType::Wall, 0.0, -1};
    for (int f = 0; f < 2 * dim; ++f) {
      const Face face = static_cast<Face>(f);
      const int axis = face_axis(face);
      const bool on = face_inward(face) > 0 ? c[axis] == 0 : c[axis] == g.extent(axis) - 1;
      if (!on) continue;
      bn.faces |= static_cast<std::uint8_t>(1u << f);
      const auto& slot = assigned[static_cast<std::size_t>(f)];
      const auto it = slot.find(n);
      const FaceEntry entry = it == slot.end() ? FaceEntry{BoundaryType::Wall, 0.0, -1} : it->second;
      if (entry.type == BoundaryType::Wall) {
        bn.wall_faces |= static_cast<std::uint8_t>(1u << f);
      } else if (entry.type == BoundaryType::Symmetry) {
        bn.symmetry_faces |= static_cast<std::uint8_t>(1u << f);
      } else {
        ++open_count;
        open_face = face;
        open_entry = entry;
      }
    }
    if (bn.faces == 0) continue;

    if (bn.wall_faces != 0 || open_count >= 2) {
      bn.role = NodeRole::Wall;
      bn.type = BoundaryType::Wall;
      // open faces of a demoted corner behave as walls for its links
      bn.wall_faces = static_cast<std::uint8_t>(bn.faces & ~bn.symmetry_faces);
    } else if (open_count == 1) {
      bn.type = open_entry.type;
      bn.role = open_entry.type == BoundaryType::PressureOutlet ? NodeRole::Outlet : NodeRole::Inlet;
      bn.axis = face_axis(open_face);
      bn.inward = face_inward(open_face);
      bn.value = open_entry.value;
    } else {
      bn.role = NodeRole::Symmetry;
      bn.type = BoundaryType::Symmetry;
    }
    map.roles[static_cast<std::size_t>(n)] = bn.role;
    map.boundary_slot[static_cast<std::size_t>(n)] = static_cast<int>(map.boundary.size());
    if (bn.role == NodeRole::Inlet) map.inlet_nodes.push_back(n);
    if (bn.role == NodeRole::Outlet) map.outlet_nodes.push_back(n);
    map.boundary.push_back(bn);
  }
  return map;
}

DesignState make_design(Index n, const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, double phi0) {
  DesignState s;
  s.alpha = Eigen::VectorXd::Ones(n);
  s.phi = Eigen::VectorXd::Ones(n);
  s.designable = designable;
  for (Index j = 0; j < n; ++j)
    if (designable[j]) s.phi[j] = phi0;
  return map_levelset_to_design(std::move(s));
}

DesignState map_levelset_to_design(DesignState state) {
  for (Index j = 0; j < state.size(); ++j) {
    if (!state.designable[j]) continue;
    state.phi[j] = std::clamp(state.phi[j], -1.0, 1.0);
    state.alpha[j] = state.phi[j] >= 0.0 ? 1.0 : 0.0;
  }
  return state;
}

double volume_constraint(const DesignState& state, double vmax) {
  double sum = 0.0;
  for (Index j = 0; j < state.size(); ++j)
    if (state.designable[j]) sum += state.alpha[j];
  return sum - vmax * static_cast<double>(state.designable_count());
}

std::string_view to_string(CaseKind k) {
  switch (k) {
    case CaseKind::Channel2D:
      return "channel_2d";
    case CaseKind::PipeBend2D:
      return "pipe_bend_2d";
    case CaseKind::PipeBend3D:
      return "pipe_bend_3d";
    case CaseKind::HeatSink3D:
      return "heat_sink_3d";
  }
  return "unknown";
}

CaseKind parse_case_kind(std::string_view name) {
  for (auto k : {CaseKind::Channel2D, CaseKind::PipeBend2D, CaseKind::PipeBend3D, CaseKind::HeatSink3D})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown case '" + std::string(name) + "'");
}

double CaseConfig::thermal_tau_fluid() const {
  if (tau_g_fluid) return *tau_g_fluid;
  // κ = ν / Pr, τ_g = 0.5 + κ / cs2 with cs2 = 1/4
  return 0.5 + 4.0 * nu() / Pr;
}

double CaseConfig::thermal_tau_solid() const {
  if (tau_g_solid) return *tau_g_solid;
  return 0.5 + 4.0 * conductivity_ratio * nu() / Pr;
}

void CaseConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(std::isfinite(tau) && tau > 0.5, "tau must exceed 0.5");
  require(rho0 > 0.0, "rho0 must be positive");
  require(Vmax > 0.0 && Vmax <= 1.0, "Vmax must lie in (0, 1]");
  require(forward_tol > 0.0, "forward_tol must be positive");
  require(adjoint_tol > 0.0, "adjoint_tol must be positive");
  require(max_steps > 0, "max_steps must be positive");
  require(stability_iter_cap > 0, "stability_iter_cap must be positive");
  require(window > 0, "window must be positive");
  require(K > 0.0 && dxi > 0.0, "K and dxi must be positive");
  require(sigma >= 0.0, "sigma must be non-negative");
  require(max_phi_change > 0.0, "max_phi_change must be positive");
  require(lambda_sharpness > 0.0, "lambda_sharpness must be positive");
  require(adjoint_divergence_limit > 0.0, "adjoint_divergence_limit must be positive");
  require(fdm_step > 0.0, "fdm_step must be positive");
  require(verify_tol > 0.0, "verify_tol must be positive");
  require(max_iterations > 0, "max_iterations must be positive");
  require(sensitivity_form == "secant" || sensitivity_form == "tangent",
          "sensitivity_form must be 'secant' or 'tangent'");
  require(port_lo >= 0.0 && port_hi <= 1.0 && port_lo < port_hi, "port_lo/port_hi must satisfy 0 <= lo < hi <= 1");
  require(port_fraction > 0.0 && port_fraction < 1.0, "port_fraction must lie in (0, 1)");
  require(nx >= 3 && ny >= 3, "grid extents must be at least 3");
  const bool three_d = case_kind == CaseKind::PipeBend3D || case_kind == CaseKind::HeatSink3D;
  require(three_d ? nz >= 3 : nz == 1, three_d ? "nz must be at least 3 for 3D cases" : "nz must be 1 for 2D cases");
  if (case_kind == CaseKind::HeatSink3D) {
    require(Pr > 0.0 && conductivity_ratio > 0.0, "Pr and conductivity_ratio must be positive");
    require(thermal_tau_fluid() > 0.5, "tau_g_fluid must exceed 0.5");
    require(thermal_tau_solid() > 0.5, "tau_g_solid must exceed 0.5");
    require(beta_max >= 0.0, "beta_max must be non-negative");
    require(p1.has_value() || Re.has_value(), "heat sink needs p1 (or Re)");
  } else {
    require(u_in.has_value() || Re.has_value(), "u_in (or Re) is required");
  }
  if (u_in) require(std::isfinite(*u_in), "u_in must be finite");
  if (Re) require(*Re >= 0.0, "Re must be non-negative");
}

}  // namespace lbtopo
