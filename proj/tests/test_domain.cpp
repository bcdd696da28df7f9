#include <gtest/gtest.h>

#include "lbtopo/cases.hpp"
#include "lbtopo/domain.hpp"

using namespace lbtopo;

TEST(Grid, RejectsSmallExtents) {
  EXPECT_THROW(GridGeometry(2, 10), ConfigError);
  EXPECT_THROW(GridGeometry(10, 10, 2), ConfigError);
  EXPECT_NO_THROW(GridGeometry(3, 3, 3));
}

TEST(Grid, IndexRoundTrip) {
  const GridGeometry g(5, 4, 3);
  for (Index n = 0; n < g.size(); ++n) EXPECT_EQ(g.index(g.coords(n)), n);
  EXPECT_EQ(g.wrap({-1, 4, 3}), Eigen::Vector3i(4, 0, 0));
}

TEST(Classify, EmptySpecIsClosedCavity) {
  const GridGeometry g(6, 5);
  const NodeRoleMap m = classify_nodes(g, {});
  int walls = 0;
  for (Index n = 0; n < g.size(); ++n) {
    const auto c = g.coords(n);
    const bool face = c[0] == 0 || c[1] == 0 || c[0] == 5 || c[1] == 4;
    EXPECT_EQ(m.role(n), face ? NodeRole::Wall : NodeRole::Interior);
    walls += face;
  }
  EXPECT_EQ(static_cast<int>(m.boundary.size()), walls);
  EXPECT_EQ(m.inlet_count(), 0);
}

TEST(Classify, PipeBendPorts) {
  CaseConfig cfg;
  cfg.nx = 100;
  cfg.ny = 100;
  cfg.u_in = 0.01;
  const Case c = build_case(cfg);
  EXPECT_EQ(c.roles.inlet_count(), 20);
  EXPECT_DOUBLE_EQ(c.roles.inlet_area(), 20.0);
  EXPECT_EQ(c.roles.role(c.geometry.index(0, 75)), NodeRole::Inlet);
  EXPECT_EQ(c.roles.role(c.geometry.index(0, 69)), NodeRole::Wall);
  EXPECT_EQ(c.roles.role(c.geometry.index(80, 0)), NodeRole::Outlet);
  EXPECT_EQ(c.roles.role(c.geometry.index(50, 50)), NodeRole::Interior);
  EXPECT_EQ(c.design.designable_count(), 100 * 100 - 40);
}

TEST(Classify, CornerSharedByTwoOpenFacesIsWall) {
  const GridGeometry g(6, 6);
  const BoundarySpec spec{
      {Face::XMin, {0, 0}, {6, 1}, BoundaryType::VelocityInlet, 0.01},
      {Face::YMin, {0, 0}, {6, 1}, BoundaryType::VelocityInlet, 0.01},
  };
  const NodeRoleMap m = classify_nodes(g, spec);
  EXPECT_EQ(m.role(g.index(0, 0)), NodeRole::Wall);
  EXPECT_EQ(m.role(g.index(0, 3)), NodeRole::Inlet);
  // The xmin/ymax corner touches an unlisted wall face.
  EXPECT_EQ(m.role(g.index(0, 5)), NodeRole::Wall);
}

TEST(Classify, Errors) {
  const GridGeometry g(6, 6);
  EXPECT_THROW(classify_nodes(g, {{Face::XMin, {2, 0}, {9, 1}, BoundaryType::VelocityInlet, 0.1}}), ConfigError);
  EXPECT_THROW(classify_nodes(g, {{Face::XMin, {0, 0}, {3, 1}, BoundaryType::VelocityInlet, 0.1},
                                  {Face::XMin, {2, 0}, {5, 1}, BoundaryType::PressureOutlet, 1.0}}),
               ConfigError);
  EXPECT_THROW(classify_nodes(g, {{Face::ZMin, {0, 0}, {3, 3}, BoundaryType::Wall, 0.0}}), ConfigError);
}

TEST(Classify, Deterministic) {
  const GridGeometry g(8, 7);
  const BoundarySpec spec{{Face::XMin, {2, 0}, {5, 1}, BoundaryType::VelocityInlet, 0.02}};
  const NodeRoleMap a = classify_nodes(g, spec);
  const NodeRoleMap b = classify_nodes(g, spec);
  EXPECT_EQ(a.roles, b.roles);
}

TEST(Design, LevelSetMapping) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(4, true);
  mask[3] = false;
  DesignState s = make_design(4, mask);
  EXPECT_EQ(s.alpha, Eigen::VectorXd::Ones(4));
  s.phi << -0.3, 0.0, 1.7, -0.5;
  s.alpha[3] = 1.0;
  const DesignState m = map_levelset_to_design(s);
  EXPECT_EQ(m.alpha[0], 0.0);
  EXPECT_EQ(m.alpha[1], 1.0);
  EXPECT_EQ(m.alpha[2], 1.0);
  EXPECT_EQ(m.phi[2], 1.0);
  EXPECT_EQ(m.alpha[3], 1.0);
  EXPECT_EQ(m.phi[3], -0.5);
  const DesignState again = map_levelset_to_design(m);
  EXPECT_EQ(again.alpha, m.alpha);
  EXPECT_EQ(again.phi, m.phi);
}

TEST(Design, VolumeConstraint) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(100, true);
  DesignState s = make_design(100, mask);
  EXPECT_DOUBLE_EQ(volume_constraint(s, 1.0), 0.0);
  s.alpha.setZero();
  EXPECT_DOUBLE_EQ(volume_constraint(s, 0.25), -25.0);
  s.alpha.head(30).setOnes();
  EXPECT_DOUBLE_EQ(volume_constraint(s, 0.25), 5.0);
}

TEST(Config, Validation) {
  CaseConfig cfg;
  cfg.u_in = 0.01;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tau = 0.4;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "tau must exceed 0.5");
  }
  cfg.tau = 0.8;
  cfg.Vmax = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ReynoldsNumber) {
  CaseConfig cfg;
  cfg.u_in = 0.05;
  cfg.tau = 0.8;
  EXPECT_NEAR(reynolds_number(cfg, 20.0), 10.0, 1e-12);
  CaseConfig p;
  p.case_kind = CaseKind::HeatSink3D;
  p.u_in.reset();
  p.p1 = 0.4;
  p.p0 = 0.4;
  EXPECT_EQ(reynolds_number(p, 10.0), 0.0);
}

TEST(Config, ReynoldsResolvesInletVelocity) {
  CaseConfig cfg;
  cfg.nx = 80;
  cfg.ny = 80;
  cfg.tau = 0.8;
  cfg.Re = 2.0;
  const Case c = build_case(cfg);
  EXPECT_NEAR(reynolds_number(c.config, c.length), 2.0, 1e-12);
  EXPECT_FALSE(c.config.Re.has_value());
}
