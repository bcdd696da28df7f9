#pragma once

#include <string>

#include "lbtopo/domain.hpp"
#include "lbtopo/lattice.hpp"

namespace lbtopo {

/// Fully resolved case: geometry, roles, initial design, and the config with
/// Re already converted into u_in or p1.
struct Case {
  CaseConfig config;
  GridGeometry geometry;
  BoundarySpec spec;
  NodeRoleMap roles;
  DesignState design;
  StencilKind flow_stencil = StencilKind::D2Q9;
  bool thermal = false;
  /// Characteristic length used for Re.
  double length = 1.0;
  std::string length_basis;
};

/// Builds one of the benchmark geometries from the config.
Case build_case(const CaseConfig& config);

/// Re = U L / ν with U = u_in, or sqrt((p1 − p0)/ρ0) for pressure-driven cases.
double reynolds_number(const CaseConfig& config, double length);

}  // namespace lbtopo
