#include <gtest/gtest.h>

#include <random>

#include "lbtopo/adjoint_continuous.hpp"
#include "lbtopo/adjoint_discrete.hpp"
#include "lbtopo/forward.hpp"
#include "node_ops.hpp"

using namespace lbtopo;

namespace {

PopulationField random_field(int q, Index n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  return PopulationField::NullaryExpr(q, n, [&] { return d(rng); });
}

double dot(const PopulationField& a, const PopulationField& b) { return (a.array() * b.array()).sum(); }

// Every role on one small grid: velocity inlet, pressure inlet, pressure
// outlets on two faces, a symmetry face, walls and mixed corners.
BoundarySpec all_roles_2d() {
  return {{Face::XMin, {2, 0}, {5, 1}, BoundaryType::VelocityInlet, 0.03},
          {Face::XMax, {1, 0}, {3, 1}, BoundaryType::PressureInlet, 1.02},
          {Face::XMax, {3, 0}, {5, 1}, BoundaryType::PressureOutlet, 1.0},
          {Face::YMin, {2, 0}, {6, 1}, BoundaryType::PressureOutlet, 0.99},
          {Face::YMax, {0, 0}, {9, 1}, BoundaryType::Symmetry, 0.0}};
}

BoundarySpec all_roles_3d() {
  return {{Face::XMin, {1, 1}, {4, 5}, BoundaryType::VelocityInlet, 0.03},
          {Face::XMax, {1, 1}, {3, 6}, BoundaryType::PressureInlet, 1.02},
          {Face::XMax, {3, 1}, {5, 6}, BoundaryType::PressureOutlet, 1.0},
          {Face::YMin, {2, 2}, {5, 6}, BoundaryType::PressureOutlet, 0.99},
          {Face::ZMax, {0, 0}, {7, 6}, BoundaryType::Symmetry, 0.0},
          {Face::YMax, {0, 0}, {7, 6}, BoundaryType::Symmetry, 0.0}};
}

struct Frozen {
  GridGeometry g;
  NodeRoleMap roles;
  LatticePtr lat;
  Eigen::VectorXd alpha;
};

Frozen frozen_2d(int nx, int ny, const BoundarySpec& spec) {
  Frozen f{GridGeometry(nx, ny), {}, nullptr, {}};
  f.roles = classify_nodes(f.g, spec);
  f.lat = make_lattice(f.g, StencilKind::D2Q9);
  f.alpha = Eigen::VectorXd::Ones(f.g.size());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (Index n = 0; n < f.g.size(); ++n) {
    const double r = d(rng);
    if (r < 0.15) f.alpha[n] = 0.0;
    else if (r < 0.25) f.alpha[n] = r;
  }
  return f;
}

// Collision tangent on a whole field.
PopulationField collide_tangent(const Lattice& lat, const PopulationField& df, const Eigen::Matrix3Xd& u,
                                const Eigen::VectorXd& alpha, double tau) {
  PopulationField out(df.rows(), df.cols());
  dispatch_stencil(lat.stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    for (Index n = 0; n < df.cols(); ++n)
      detail::collide_tangent_node<T>(df.data() + n * T::q, out.data() + n * T::q, u.col(n).data(), alpha[n],
                                      1.0 / tau);
  });
  return out;
}

}  // namespace

TEST(DiscreteBoundary, FastPathMatchesMechanicalTranspose) {
  struct Setup {
    GridGeometry g;
    BoundarySpec spec;
    StencilKind kind;
    BoundaryPhysics physics;
  };
  const Setup setups[] = {
      {GridGeometry(9, 7), all_roles_2d(), StencilKind::D2Q9, BoundaryPhysics::Flow},
      {GridGeometry(7, 6, 6), all_roles_3d(), StencilKind::D3Q19, BoundaryPhysics::Flow},
      {GridGeometry(7, 6, 6), all_roles_3d(), StencilKind::D3Q7, BoundaryPhysics::Thermal},
      {GridGeometry(7, 6, 6), {}, StencilKind::D3Q19, BoundaryPhysics::Flow},
  };
  for (const Setup& s : setups) {
    const NodeRoleMap roles = classify_nodes(s.g, s.spec);
    const BoundaryOperator op(make_lattice(s.g, s.kind), roles, s.physics, 1.0);
    const BoundaryJacobian jac(op);
    EXPECT_LE(check_transpose_fast_path(op, jac, 1000, 77u), 1e-13) << to_string(s.kind);
  }
}

TEST(DiscreteBoundary, JacobianMatchesLinearPart) {
  const GridGeometry g(9, 7);
  const NodeRoleMap roles = classify_nodes(g, all_roles_2d());
  const BoundaryOperator op(make_lattice(g, StencilKind::D2Q9), roles, BoundaryPhysics::Flow, 1.0);
  const BoundaryJacobian jac(op);
  PopulationField x = random_field(9, g.size(), 8);
  PopulationField a = x;
  op.apply(a, false);
  jac.apply(x);
  EXPECT_LE((a - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DiscreteBoundary, InletAllOnesExample) {
  const GridGeometry g(6, 7);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {1, 0}, {6, 1}, BoundaryType::VelocityInlet, 0.05}});
  const BoundaryOperator op(make_lattice(g, StencilKind::D2Q9), roles, BoundaryPhysics::Flow, 1.0);
  // Ones on this node only: the wrapped outgoing slots are read by the walls
  // on the far face, which would otherwise add their own entries.
  const Index n = g.index(0, 3);
  PopulationField y = PopulationField::Zero(9, g.size());
  y.col(n).setOnes();
  op.apply_transpose(y);
  for (int i : {1, 5, 8}) EXPECT_NEAR(y(i, n), 0.0, 1e-15) << i;
  for (int i : {0, 2, 4}) EXPECT_NEAR(y(i, n), 1.0, 1e-15) << i;
  for (int i : {3, 6, 7}) EXPECT_NEAR(y(i, n), 2.0, 1e-15) << i;
}

TEST(DiscreteBoundary, OutletAllOnesCancels) {
  const GridGeometry g(7, 6);
  const NodeRoleMap roles = classify_nodes(g, {{Face::YMin, {1, 0}, {6, 1}, BoundaryType::PressureOutlet, 1.0}});
  const BoundaryOperator op(make_lattice(g, StencilKind::D2Q9), roles, BoundaryPhysics::Flow, 1.0);
  const Index n = g.index(3, 0);
  PopulationField y = PopulationField::Zero(9, g.size());
  y.col(n).setOnes();
  op.apply_transpose(y);
  EXPECT_LE(y.col(n).cwiseAbs().maxCoeff(), 1e-15);
  PopulationField z = PopulationField::Zero(9, g.size());
  op.apply_transpose(z);
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiscreteBoundary, ThermalInletAllOnes) {
  const GridGeometry g(5, 6, 6);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {1, 1}, {5, 5}, BoundaryType::PressureInlet, 1.0}});
  const BoundaryOperator op(make_lattice(g, StencilKind::D3Q7), roles, BoundaryPhysics::Thermal, 1.0);
  const Index n = g.index(0, 3, 3);
  PopulationField y = PopulationField::Zero(7, g.size());
  y.col(n).setOnes();
  op.apply_transpose(y);
  EXPECT_NEAR(y(1, n), 0.0, 1e-15);
  EXPECT_NEAR(y(2, n), 0.0, 1e-15);
  for (int i : {0, 3, 4, 5, 6}) EXPECT_NEAR(y(i, n), 1.0, 1e-15) << i;
}

TEST(AdjointStream, TransposeIdentity) {
  const auto lat = make_lattice(GridGeometry(7, 5, 4), StencilKind::D3Q19);
  const PopulationField a = random_field(19, lat->size(), 1);
  const PopulationField b = random_field(19, lat->size(), 2);
  EXPECT_NEAR(dot(stream(*lat, a), b), dot(a, stream_reversed(*lat, b)), 1e-13);
  EXPECT_EQ(stream_reversed(*lat, stream(*lat, a)), a);
  PopulationField one = PopulationField::Zero(19, lat->size());
  const GridGeometry& g = lat->geometry();
  one(1, g.index(3, 2, 1)) = 1.0;
  EXPECT_EQ(stream_reversed(*lat, one)(1, g.index(2, 2, 1)), 1.0);
}

TEST(AdjointCollide, MatchesDifferencedCollision) {
  // The collision is quadratic in f, so the central difference is exact for
  // any step; the step size only moves rounding.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.02, 0.2);
  auto check = [&](auto traits) {
    using T = decltype(traits);
    constexpr int q = T::q;
    for (int trial = 0; trial < 50; ++trial) {
      double f[q];
      double y[q];
      for (int i = 0; i < q; ++i) {
        f[i] = d(rng);
        y[i] = d(rng) - 0.1;
      }
      const double alpha = trial % 3 == 0 ? 1.0 : d(rng) * 5.0;
      const double omega = 1.0 / (0.55 + d(rng) * 3.0);
      const double rho0 = 1.0;
      Eigen::Matrix<double, q, q> jac;
      for (int i = 0; i < q; ++i) {
        double fp[q], fm[q], cp[q], cm[q];
        for (int k = 0; k < q; ++k) fp[k] = fm[k] = f[k];
        fp[i] += 0.5;
        fm[i] -= 0.5;
        detail::collide_node<T>(fp, cp, alpha, omega, rho0);
        detail::collide_node<T>(fm, cm, alpha, omega, rho0);
        for (int m = 0; m < q; ++m) jac(m, i) = cp[m] - cm[m];
      }
      double u[3];
      detail::node_velocity<T>(f, rho0, u);
      double out[q];
      detail::adjoint_collide_node<T>(y, out, u, alpha, omega);
      const Eigen::Matrix<double, q, 1> ref = jac.transpose() * Eigen::Map<Eigen::Matrix<double, q, 1>>(y);
      for (int i = 0; i < q; ++i) EXPECT_NEAR(out[i], ref[i], 1e-13);
    }
  };
  check(StencilTraits<StencilKind::D2Q9>{});
  check(StencilTraits<StencilKind::D3Q19>{});
}

TEST(AdjointCollide, ThermalMatchesDifferencedCollision) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  using T = StencilTraits<StencilKind::D3Q7>;
  for (int trial = 0; trial < 50; ++trial) {
    double g[7], y[7];
    for (int i = 0; i < 7; ++i) {
      g[i] = 0.1 + d(rng);
      y[i] = d(rng);
    }
    const double u[3] = {d(rng), d(rng), d(rng)};
    const double alpha = 0.5 + 5.0 * d(rng);
    const double rate = 1.0 / (0.8 + 3.0 * std::abs(d(rng)));
    const double beta = std::abs(d(rng));
    Eigen::Matrix<double, 7, 7> jac;
    for (int i = 0; i < 7; ++i) {
      double gp[7], gm[7], cp[7], cm[7];
      for (int k = 0; k < 7; ++k) gp[k] = gm[k] = g[k];
      gp[i] += 0.5;
      gm[i] -= 0.5;
      detail::thermal_collide_node<T>(gp, cp, u, alpha, rate, beta);
      detail::thermal_collide_node<T>(gm, cm, u, alpha, rate, beta);
      for (int m = 0; m < 7; ++m) jac(m, i) = cp[m] - cm[m];
    }
    double out[7];
    detail::thermal_adjoint_collide_node<T>(y, out, u, alpha, rate, beta);
    const Eigen::Matrix<double, 7, 1> ref = jac.transpose() * Eigen::Map<Eigen::Matrix<double, 7, 1>>(y);
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(out[i], ref[i], 1e-14);
  }
}

TEST(AdjointCollide, RestStateKeepsConstant) {
  double y[9];
  double out[9];
  for (double& v : y) v = 0.7;
  const double u[3] = {0.0, 0.0, 0.0};
  detail::adjoint_collide_node<StencilTraits<StencilKind::D2Q9>>(y, out, u, 0.4, 1.0 / 0.8);
  for (double v : out) EXPECT_NEAR(v, 0.7, 1e-15);
}

class DotProduct : public ::testing::TestWithParam<BoundaryTranspose> {};

TEST_P(DotProduct, FlowStepIsTransposed) {
  Frozen fz = frozen_2d(12, 12,
                        {{Face::XMin, {7, 0}, {11, 1}, BoundaryType::VelocityInlet, 0.04},
                         {Face::YMin, {7, 0}, {11, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(fz.lat, fz.roles, 0.7, 1.0, fz.alpha);
  for (int k = 0; k < 300; ++k) solver.step();
  DiscreteFlowAdjoint adj(solver, {}, GetParam());
  const Eigen::Matrix3Xd u = solver.macros().u;
  ASSERT_GT(u.cwiseAbs().maxCoeff(), 1e-3);

  for (unsigned seed = 0; seed < 3; ++seed) {
    const PopulationField a = random_field(9, fz.g.size(), 100 + seed);
    const PopulationField b = random_field(9, fz.g.size(), 200 + seed);
    PopulationField fa = stream(*fz.lat, collide_tangent(*fz.lat, a, u, fz.alpha, solver.tau()));
    solver.boundary().apply(fa, false);
    adj.set_fstar_C(b);
    adj.step();
    const double lhs = dot(fa, b);
    const double rhs = dot(a, adj.fstar_C());
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * a.norm() * b.norm()) << lhs << " " << rhs;
  }
}

TEST_P(DotProduct, ThermalStepIsTransposed) {
  const GridGeometry g(8, 6, 6);
  const NodeRoleMap roles = classify_nodes(g, all_roles_3d());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  Eigen::VectorXd alpha(g.size());
  for (Index n = 0; n < g.size(); ++n) alpha[n] = d(rng) > 0.0 ? 1.0 : 0.0;
  const Eigen::Matrix3Xd u = Eigen::Matrix3Xd::NullaryExpr(3, g.size(), [&] { return d(rng); });
  const ThermalParams params{0.7, 1.3, 0.02, 0.0};
  ThermalSolver solver(make_lattice(g, StencilKind::D3Q7), roles, params, alpha, u);
  DiscreteThermalAdjoint adj(solver, GetParam());

  const PopulationField a = random_field(7, g.size(), 31);
  const PopulationField b = random_field(7, g.size(), 32);
  const Lattice& lat = solver.lattice();
  // Linear part of the collision: the source is affine in g.
  const PopulationField lin = thermal_collide(lat, a, alpha, u, params) -
                              thermal_collide(lat, PopulationField::Zero(7, g.size()), alpha, u, params);
  PopulationField fa = stream(lat, lin);
  solver.boundary().apply(fa, false);
  PopulationField yb = b;
  adj.boundary_transpose(yb);
  const PopulationField ab = adj.collide_transpose(stream_reversed(lat, yb));
  EXPECT_LE(std::abs(dot(fa, b) - dot(a, ab)), 1e-12 * a.norm() * b.norm());
}

INSTANTIATE_TEST_SUITE_P(Paths, DotProduct,
                         ::testing::Values(BoundaryTranspose::Fast, BoundaryTranspose::Mechanical));

TEST(DotProductOrder, ReversedOrderBreaksTranspose) {
  Frozen fz = frozen_2d(12, 12,
                        {{Face::XMin, {7, 0}, {11, 1}, BoundaryType::VelocityInlet, 0.04},
                         {Face::YMin, {7, 0}, {11, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(fz.lat, fz.roles, 0.7, 1.0, fz.alpha);
  for (int k = 0; k < 300; ++k) solver.step();
  const DiscreteFlowAdjoint adj(solver, {});
  const Eigen::Matrix3Xd u = solver.macros().u;
  const PopulationField a = random_field(9, fz.g.size(), 41);
  const PopulationField b = random_field(9, fz.g.size(), 42);
  PopulationField fa = stream(*fz.lat, collide_tangent(*fz.lat, a, u, fz.alpha, solver.tau()));
  solver.boundary().apply(fa, false);
  // Primal order (collide, stream, boundary) applied to the adjoint instead.
  PopulationField wrong = stream_reversed(*fz.lat, adj.collide_transpose(b));
  adj.boundary_transpose(wrong);
  EXPECT_GT(std::abs(dot(fa, b) - dot(a, wrong)), 1e-6 * a.norm() * b.norm());
}

TEST(DiscreteAdjoint, SourceOnlyAtInlet) {
  const GridGeometry g(8, 8);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {2, 0}, {6, 1}, BoundaryType::VelocityInlet, 0.02},
                                               {Face::YMin, {2, 0}, {6, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g.size());
  for (Index n : roles.inlet_nodes) w[n] = 1.0 / (3.0 * roles.inlet_count());
  DiscreteFlowAdjoint adj(solver, w);
  adj.step();
  const Index in = roles.inlet_nodes[1];
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(adj.fstar_C()(i, in), -1.0 / 12.0, 1e-15);
  EXPECT_EQ(adj.fstar_C().col(g.index(4, 4)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiscreteAdjoint, RestFlowConverges) {
  const GridGeometry g(10, 10);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {6, 0}, {9, 1}, BoundaryType::VelocityInlet, 0.0},
                                               {Face::YMin, {6, 0}, {9, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g.size());
  for (Index n : roles.inlet_nodes) w[n] = 1.0 / (3.0 * roles.inlet_count());
  DiscreteFlowAdjoint adj(solver, w);
  AdjointRunOptions o;
  o.tol = 1e-10;
  EXPECT_EQ(adj.run(o).status, RunStatus::Converged);
}

TEST(ThermalAdjoint, SourceInSolidOnly) {
  const GridGeometry g(6, 5, 5);
  const NodeRoleMap roles = classify_nodes(g, {});
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(g.size());
  const Index solid = g.index(2, 2, 2);
  alpha[solid] = 0.0;
  const ThermalParams params{0.7, 1.2, 0.05, 0.0};
  ThermalSolver solver(make_lattice(g, StencilKind::D3Q7), roles, params, alpha, Eigen::Matrix3Xd::Zero(3, g.size()));
  DiscreteThermalAdjoint adj(solver);
  adj.step();
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(adj.gstar_C()(i, solid), -0.05, 1e-15);
  EXPECT_EQ(adj.gstar_C().col(g.index(3, 2, 2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Coupling, Examples) {
  const GridGeometry g(5, 5, 5);
  const auto flow = make_lattice(g, StencilKind::D3Q19);
  const auto heat = make_lattice(g, StencilKind::D3Q7);
  const ThermalParams params{0.7, 1.2, 0.05, 0.0};
  const PopulationField gs = random_field(7, g.size(), 3);
  Eigen::VectorXd T = Eigen::VectorXd::Constant(g.size(), 0.4);
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(g.size());
  T[7] = 0.0;
  alpha[9] = 0.0;
  const PopulationField c = flow_adjoint_coupling(*flow, *heat, gs, T, alpha, params, 1.0);
  EXPECT_EQ(c.col(7).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(c.col(9).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(c.col(11).cwiseAbs().maxCoeff(), 0.0);
  const PopulationField cc =
      flow_adjoint_coupling(*flow, *heat, PopulationField::Constant(7, g.size(), 0.3), T, alpha, params, 1.0);
  EXPECT_LE(cc.cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_EQ(cc.row(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ContinuousBoundary, Examples) {
  const GridGeometry g(8, 8);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {2, 0}, {6, 1}, BoundaryType::VelocityInlet, 0.02},
                                               {Face::YMin, {2, 0}, {6, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  const double s = 0.25;
  const ContinuousFlowAdjoint adj(solver, roles, s);

  PopulationField f = PopulationField::Zero(9, g.size());
  const Index out = g.index(4, 0);
  f(2, out) = f(5, out) = f(6, out) = 1.0;
  const Index in = g.index(0, 4);
  adj.apply_boundaries(f);
  for (int k : {4, 7, 8}) EXPECT_NEAR(f(k, out), -1.0, 1e-15) << k;
  for (int k : {3, 6, 7}) EXPECT_NEAR(f(k, in), -s, 1e-15) << k;

  ContinuousFlowAdjoint zero(solver, roles, 0.0);
  for (int k = 0; k < 20; ++k) zero.step();
  EXPECT_EQ(zero.fstar().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ContinuousBoundary, RejectsPressureInlet) {
  const GridGeometry g(8, 8);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {2, 0}, {6, 1}, BoundaryType::PressureInlet, 1.01},
                                               {Face::YMin, {2, 0}, {6, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  EXPECT_THROW(ContinuousFlowAdjoint(solver, roles, 1.0), ConfigError);
}

TEST(ContinuousAdjoint, LinearWithoutSource) {
  const GridGeometry g(10, 10);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {6, 0}, {9, 1}, BoundaryType::VelocityInlet, 0.03},
                                               {Face::YMin, {6, 0}, {9, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  for (int k = 0; k < 200; ++k) solver.step();
  ContinuousFlowAdjoint a(solver, roles, 0.0);
  ContinuousFlowAdjoint b(solver, roles, 0.0);
  const PopulationField f0 = random_field(9, g.size(), 17);
  a.set_fstar(f0);
  b.set_fstar(2.5 * f0);
  for (int k = 0; k < 30; ++k) {
    a.step();
    b.step();
  }
  EXPECT_LE((2.5 * a.fstar() - b.fstar()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ContinuousAdjoint, RestFlowConverges) {
  const GridGeometry g(10, 10);
  const NodeRoleMap roles = classify_nodes(g, {{Face::XMin, {6, 0}, {9, 1}, BoundaryType::VelocityInlet, 0.0},
                                               {Face::YMin, {6, 0}, {9, 1}, BoundaryType::PressureOutlet, 1.0}});
  FlowSolver solver(make_lattice(g, StencilKind::D2Q9), roles, 0.8, 1.0, Eigen::VectorXd::Ones(g.size()));
  ContinuousFlowAdjoint adj(solver, roles, 2.0 / (3.0 * roles.inlet_area()));
  AdjointRunOptions o;
  o.tol = 1e-10;
  const RunResult r = adj.run(o);
  EXPECT_EQ(r.status, RunStatus::Converged);
  EXPECT_FALSE(adj.inconsistency_history().empty());
}
