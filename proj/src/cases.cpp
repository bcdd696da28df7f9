#include "lbtopo/cases.hpp"

#include <cmath>

namespace lbtopo {

namespace {

int span_index(double frac, int extent) { return static_cast<int>(std::lround(frac * extent)); }

Eigen::Array<bool, Eigen::Dynamic, 1> non_open_mask(const NodeRoleMap& roles) {
  const Index n = roles.geometry.size();
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(n);
  for (Index j = 0; j < n; ++j) {
    const NodeRole r = roles.role(j);
    mask[j] = r != NodeRole::Inlet && r != NodeRole::Outlet;
  }
  return mask;
}

}  // namespace

double reynolds_number(const CaseConfig& config, double length) {
  if (config.tau <= 0.5) throw ConfigError("tau must exceed 0.5");
  double u = 0.0;
  if (config.u_in) {
    u = std::abs(*config.u_in);
  } else if (config.p1 && config.p0) {
    u = std::sqrt(std::max(0.0, *config.p1 - *config.p0) / config.rho0);
  }
  return u * length / config.nu();
}

Case build_case(const CaseConfig& input) {
  input.validate();
  Case c;
  c.config = input;
  CaseConfig& cfg = c.config;

  switch (cfg.case_kind) {
    case CaseKind::Channel2D: {
      c.geometry = GridGeometry(cfg.nx, cfg.ny);
      c.flow_stencil = StencilKind::D2Q9;
      c.length = cfg.ny;
      c.length_basis = "channel height";
      if (cfg.Re) cfg.u_in = *cfg.Re * cfg.nu() / c.length;
      c.spec = {
          {Face::XMin, {0, 0}, {cfg.ny, 1}, BoundaryType::VelocityInlet, *cfg.u_in},
          {Face::XMax, {0, 0}, {cfg.ny, 1}, BoundaryType::PressureOutlet, cfg.rho0},
      };
      break;
    }
    case CaseKind::PipeBend2D: {
      c.geometry = GridGeometry(cfg.nx, cfg.ny);
      c.flow_stencil = StencilKind::D2Q9;
      const int y0 = span_index(cfg.port_lo, cfg.ny);
      const int y1 = span_index(cfg.port_hi, cfg.ny);
      const int x0 = span_index(cfg.port_lo, cfg.nx);
      const int x1 = span_index(cfg.port_hi, cfg.nx);
      c.length = y1 - y0;
      c.length_basis = "inlet width";
      if (cfg.Re) cfg.u_in = *cfg.Re * cfg.nu() / c.length;
      c.spec = {
          {Face::XMin, {y0, 0}, {y1, 1}, BoundaryType::VelocityInlet, *cfg.u_in},
          {Face::YMin, {x0, 0}, {x1, 1}, BoundaryType::PressureOutlet, cfg.rho0},
      };
      break;
    }
    case CaseKind::PipeBend3D: {
      c.geometry = GridGeometry(cfg.nx, cfg.ny, cfg.nz);
      c.flow_stencil = StencilKind::D3Q19;
      const int y0 = span_index(cfg.port_lo, cfg.ny);
      const int y1 = span_index(cfg.port_hi, cfg.ny);
      const int x0 = span_index(cfg.port_lo, cfg.nx);
      const int x1 = span_index(cfg.port_hi, cfg.nx);
      const double half = 0.5 * (cfg.port_hi - cfg.port_lo);
      const int z0 = span_index(0.5 - half, cfg.nz);
      const int z1 = span_index(0.5 + half, cfg.nz);
      c.length = y1 - y0;
      c.length_basis = "inlet width";
      if (cfg.Re) cfg.u_in = *cfg.Re * cfg.nu() / c.length;
      c.spec = {
          {Face::XMin, {y0, z0}, {y1, z1}, BoundaryType::VelocityInlet, *cfg.u_in},
          {Face::YMin, {x0, z0}, {x1, z1}, BoundaryType::PressureOutlet, cfg.rho0},
      };
      break;
    }
    case CaseKind::HeatSink3D: {
      c.geometry = GridGeometry(cfg.nx, cfg.ny, cfg.nz);
      c.flow_stencil = StencilKind::D3Q19;
      c.thermal = true;
      c.length = cfg.nx;
      c.length_basis = "domain edge length";
      if (!cfg.p0) cfg.p0 = cfg.rho0 / 3.0;
      if (cfg.Re) {
        const double u = *cfg.Re * cfg.nu() / c.length;
        cfg.p1 = *cfg.p0 + cfg.rho0 * u * u;
      }
      const int y0 = span_index(1.0 - cfg.port_fraction, cfg.ny);
      const int z0 = span_index(1.0 - cfg.port_fraction, cfg.nz);
      c.spec = {
          {Face::XMin, {y0, z0}, {cfg.ny, cfg.nz}, BoundaryType::PressureInlet, 3.0 * *cfg.p1},
          {Face::XMax, {y0, z0}, {cfg.ny, cfg.nz}, BoundaryType::PressureOutlet, 3.0 * *cfg.p0},
          {Face::YMax, {0, 0}, {cfg.nx, cfg.nz}, BoundaryType::Symmetry, 0.0},
          {Face::ZMax, {0, 0}, {cfg.nx, cfg.ny}, BoundaryType::Symmetry, 0.0},
      };
      break;
    }
  }
  cfg.Re.reset();
  cfg.validate();
  c.roles = classify_nodes(c.geometry, c.spec);
  c.design = make_design(c.geometry.size(), non_open_mask(c.roles), cfg.case_kind == CaseKind::HeatSink3D ? 0.1 : 1.0);
  return c;
}

}  // namespace lbtopo
