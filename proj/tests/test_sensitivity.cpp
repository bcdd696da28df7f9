#include <gtest/gtest.h>

#include <cmath>

#include "lbtopo/optimizer.hpp"

using namespace lbtopo;

namespace {

CaseConfig small_bend(int n = 20) {
  CaseConfig c;
  c.case_kind = CaseKind::PipeBend2D;
  c.nx = c.ny = n;
  c.Re = 0.2;
  c.tau = 1.0;
  c.forward_tol = 1e-11;
  c.adjoint_tol = 1e-11;
  return c;
}

Eigen::VectorXd field_of(const GridGeometry& g, auto fn) {
  Eigen::VectorXd v(g.size());
  for (Index n = 0; n < g.size(); ++n) {
    const Eigen::Vector3i c = g.coords(n);
    v[n] = fn(c.x(), c.y(), c.z());
  }
  return v;
}

}  // namespace

TEST(SensitivityKernel, ZeroVelocityOrZeroAdjointGivesZero) {
  const GridGeometry g(6, 5);
  auto lat = make_lattice(g, StencilKind::D2Q9);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(g.size(), 0.7);
  const PopulationField a = PopulationField::Constant(9, g.size(), 0.3);
  Eigen::Matrix3Xd u = Eigen::Matrix3Xd::Zero(3, g.size());
  for (auto form : {SensitivityForm::Secant, SensitivityForm::Tangent})
    EXPECT_EQ(sensitivity_kernel(*lat, a, u, alpha, 0.8, 1.0, form).cwiseAbs().maxCoeff(), 0.0);
  u.row(0).setConstant(0.02);
  u.row(1).setConstant(-0.01);
  const PopulationField zero = PopulationField::Zero(9, g.size());
  for (auto form : {SensitivityForm::Secant, SensitivityForm::Tangent})
    EXPECT_EQ(sensitivity_kernel(*lat, zero, u, alpha, 0.8, 1.0, form).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SensitivityKernel, FormsMatchEquilibriumDifferences) {
  const auto lat = make_lattice(GridGeometry(3, 3), StencilKind::D2Q9);
  const Stencil& s = lat->stencil();
  const Eigen::Vector3d u(0.03, -0.02, 0.0);
  const double alpha = 0.4;
  const Eigen::VectorXd f1 = equilibrium<double>(1.0, u, 1.0, s);
  const Eigen::VectorXd f0 = equilibrium<double>(1.0, u, 0.0, s);
  const double h = 1e-4;
  const Eigen::VectorXd fp = equilibrium<double>(1.0, u, alpha + h, s);
  const Eigen::VectorXd fm = equilibrium<double>(1.0, u, alpha - h, s);
  for (int i = 0; i < 9; ++i) {
    EXPECT_NEAR(equilibrium_alpha_derivative(s.velocity(i), u, 1.0, s.weight(i), 1.0, SensitivityForm::Secant),
                f1[i] - f0[i], 1e-15);
    EXPECT_NEAR(equilibrium_alpha_derivative(s.velocity(i), u, alpha, s.weight(i), 1.0, SensitivityForm::Tangent),
                (fp[i] - fm[i]) / (2 * h), 1e-12);
  }
}

TEST(Laplacian, Examples) {
  const GridGeometry g(7, 6);
  EXPECT_LT(laplacian_phi(Eigen::VectorXd::Constant(g.size(), 0.4), g).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::VectorXd lin = field_of(g, [](int x, int y, int) { return 0.1 * x - 0.2 * y; });
  const Eigen::VectorXd sq = field_of(g, [](int x, int, int) { return double(x * x); });
  const Eigen::VectorXd l1 = laplacian_phi(lin, g);
  const Eigen::VectorXd l2 = laplacian_phi(sq, g);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 6; ++x) {
      EXPECT_NEAR(l1[g.index(x, y, 0)], 0.0, 1e-14);
      EXPECT_NEAR(l2[g.index(x, y, 0)], 2.0, 1e-12);
    }
  // a face node sees no flux across the face
  EXPECT_NEAR(l2[g.index(0, 3, 0)], 1.0, 1e-12);
}

TEST(LagrangeMultiplier, Examples) {
  const GridGeometry g(5, 4);
  const Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(g.size(), true);
  const Eigen::VectorXd phi = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd jw = Eigen::VectorXd::Constant(g.size(), 0.3);
  jw.head(5).setConstant(-0.3);
  EXPECT_NEAR(lagrange_multiplier(jw, phi, mask, g, 5e-3, 0.0), 0.3, 1e-15);
  EXPECT_EQ(lagrange_multiplier(Eigen::VectorXd::Zero(g.size()), phi, mask, g, 0.0, 0.0), 0.0);
  EXPECT_LT(lagrange_multiplier(jw, phi, mask, g, 5e-3, -200.0), 1e-80);
  EXPECT_NEAR(lagrange_multiplier(jw, phi, mask, g, 5e-3, 2.0, 4.0), 0.3 * std::exp(0.5), 1e-15);
}

TEST(RdUpdate, Examples) {
  const GridGeometry g(5, 4);
  Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(g.size(), true);
  mask[0] = false;
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(g.size(), 0.5);
  EXPECT_EQ(rd_update(phi, Eigen::VectorXd::Zero(g.size()), mask, g, 1.0, 5e-3, 0.1), phi);

  const Eigen::VectorXd down = rd_update(phi, Eigen::VectorXd::Constant(g.size(), 2.0), mask, g, 0.5, 0.0, 0.1);
  EXPECT_EQ(down[0], 0.5);
  for (Index n = 1; n < g.size(); ++n) EXPECT_NEAR(down[n], 0.4, 1e-15);

  const Eigen::VectorXd up = rd_update(phi, Eigen::VectorXd::Constant(g.size(), -100.0), mask, g, 1.0, 0.0, 0.1);
  EXPECT_EQ(up.tail(g.size() - 1).maxCoeff(), 1.0);
  const Eigen::VectorXd low = rd_update(phi, Eigen::VectorXd::Constant(g.size(), 100.0), mask, g, 1.0, 0.0, 0.1);
  EXPECT_EQ(low.tail(g.size() - 1).minCoeff(), -1.0);
}

TEST(ThermalSensitivity, PureSourceInColdSolid) {
  CaseConfig c;
  c.case_kind = CaseKind::HeatSink3D;
  c.nx = 6;
  c.ny = c.nz = 4;
  c.Re = 1.0;
  c.beta_max = 2e-3;
  const Problem p(c);
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(p.data().geometry.size());
  const Index solid = p.data().geometry.index(3, 1, 1);
  alpha[solid] = 0.0;
  ForwardState st = p.make_state(alpha);
  st.thermal->initialize();  // T = 0 everywhere, u = 0
  const DiscreteThermalAdjoint adj(*st.thermal, BoundaryTranspose::Fast, false);
  const Eigen::VectorXd jt = sensitivity_thermal(adj, *st.thermal);
  EXPECT_NEAR(jt[solid], 2e-3, 1e-18);
}

TEST(FdmOracle, DiscreteAdjointMatchesOnSmallBend) {
  const Problem p(small_bend());
  const ForwardState base = p.solve(p.data().design.alpha);
  ASSERT_EQ(base.status(), RunStatus::Converged);
  const auto nodes = diagonal_nodes(p.data(), 4, 0.2, 0.8);
  ASSERT_EQ(nodes.size(), 4u);
  FdmOptions o;
  o.tol = 1e-10;
  const auto probes = fdm_oracle(p, base, nodes, o);
  for (const auto& pr : probes) EXPECT_FALSE(pr.flagged);

  DiscreteFlowAdjoint adj(base.flow, pipebend_objective_weights(p.roles()));
  AdjointRunOptions ao = adjoint_run_options(p.config());
  ASSERT_EQ(adj.run(ao).status, RunStatus::Converged);
  const Eigen::VectorXd jw = sensitivity_discrete(adj, base.flow, SensitivityForm::Tangent);
  Eigen::VectorXd at(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) at[static_cast<Index>(k)] = jw[nodes[k]];
  EXPECT_LT(relative_l2_error(at, probes), 1e-4);

  // halving h leaves a central difference unchanged up to O(h²)
  o.h = 5e-4;
  const auto half = fdm_oracle(p, base, {nodes[1]}, o);
  EXPECT_NEAR(half[0].derivative, probes[1].derivative, 1e-3 * std::abs(probes[1].derivative));
}

TEST(FdmOracle, RejectsFixedNode) {
  const Problem p(small_bend(10));
  const ForwardState base = p.solve(p.data().design.alpha);
  EXPECT_THROW(fdm_oracle(p, base, {p.roles().inlet_nodes.front()}, FdmOptions{}), ConfigError);
}

TEST(Connectivity, FloodFill) {
  const Problem p(small_bend(12));
  Eigen::VectorXd alpha = p.data().design.alpha;
  EXPECT_TRUE(inlet_outlet_connected(p.roles(), alpha));
  const GridGeometry& g = p.data().geometry;
  // a solid wall across the chamber at x = 6 cuts every path
  for (int y = 0; y < g.ny(); ++y) alpha[g.index(6, y, 0)] = 0.0;
  EXPECT_FALSE(inlet_outlet_connected(p.roles(), alpha));
  alpha[g.index(6, 5, 0)] = 1.0;
  EXPECT_TRUE(inlet_outlet_connected(p.roles(), alpha));
}

TEST(Optimizer, HeatSinkRejectsContinuous) {
  CaseConfig c;
  c.case_kind = CaseKind::HeatSink3D;
  c.nx = 6;
  c.ny = c.nz = 4;
  c.Re = 1.0;
  c.max_steps = 500;
  const Problem p(c);
  const ForwardState st = p.solve(p.data().design.alpha);
  EXPECT_THROW(solve_sensitivity(p, st, AdjointMethod::Continuous), ConfigError);
}

TEST(Optimizer, SmallBendKeepsVolumeAndPath) {
  CaseConfig c = small_bend(16);
  c.forward_tol = 1e-6;
  c.adjoint_tol = 1e-6;
  const Problem p(c);
  int calls = 0;
  const OptimizationRun run = optimize(p, AdjointMethod::Discrete, 40, [&](const auto&, const auto&, const auto&) {
    ++calls;
  });
  EXPECT_EQ(calls, static_cast<int>(run.history.size()));
  EXPECT_TRUE(run.status == OptimizeStatus::DesignSettled || run.status == OptimizeStatus::ObjectivePlateau);
  const double n = static_cast<double>(run.design.designable_count());
  EXPECT_LE(volume_constraint(run.design, c.Vmax), 0.01 * n * c.Vmax);
  EXPECT_TRUE(inlet_outlet_connected(p.roles(), run.design.alpha));
  for (const auto& r : run.history) EXPECT_GE(r.lambda, 0.0);
}

TEST(Stability, ZeroVelocityIsStable) {
  CaseConfig c = small_bend(12);
  for (auto s : {SweepSolver::Forward, SweepSolver::ContinuousAdjoint, SweepSolver::DiscreteAdjoint})
    EXPECT_TRUE(stability_probe(c, s, 0.0, 500).stable);
}
