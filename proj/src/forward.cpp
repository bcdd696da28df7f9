#include "lbtopo/forward.hpp"

#include <cmath>

#include "node_ops.hpp"
#include "run_loop.hpp"

namespace lbtopo {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::MaxSteps:
      return "max-steps";
    case RunStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

double relative_change(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  const double diff = (a - b).norm();
  if (!std::isfinite(diff)) return std::numeric_limits<double>::infinity();
  // Changes at rounding level (RMS below 1e-14) count as none, so a fluid at rest reads as steady.
  const double rms_floor = 1e-14 * std::sqrt(static_cast<double>(std::max<Index>(a.size(), 1)));
  if (diff <= rms_floor) return 0.0;
  return diff / std::max(a.norm(), rms_floor);
}

PopulationField equilibrium_field(const Lattice& lat, const Eigen::VectorXd& rho, const Eigen::Matrix3Xd& u,
                                  const Eigen::VectorXd& alpha, double rho0) {
  PopulationField f(lat.q(), lat.size());
  for (Index n = 0; n < lat.size(); ++n)
    f.col(n) = equilibrium<double>(rho[n], u.col(n), alpha[n], lat.stencil(), rho0);
  return f;
}

PopulationField collide(const Lattice& lat, const PopulationField& f, const Eigen::VectorXd& alpha, double tau,
                        double rho0) {
  PopulationField fc(f.rows(), f.cols());
  const double omega = 1.0 / tau;
  dispatch_stencil(lat.stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    for (Index n = 0; n < f.cols(); ++n)
      detail::collide_node<T>(f.data() + n * T::q, fc.data() + n * T::q, alpha[n], omega, rho0);
  });
  return fc;
}

PopulationField thermal_collide(const Lattice& lat, const PopulationField& g, const Eigen::VectorXd& alpha,
                                const Eigen::Matrix3Xd& u, const ThermalParams& params) {
  PopulationField gc(g.rows(), g.cols());
  dispatch_stencil(lat.stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    for (Index n = 0; n < g.cols(); ++n)
      detail::thermal_collide_node<T>(g.data() + n * T::q, gc.data() + n * T::q, u.col(n).data(), alpha[n],
                                      thermal_rate(alpha[n], params.tau_fluid, params.tau_solid),
                                      heat_generation(alpha[n], params.beta_max));
  });
  return gc;
}

FlowSolver::FlowSolver(LatticePtr lattice, const NodeRoleMap& roles, double tau, double rho0, Eigen::VectorXd alpha)
    : lattice_(lattice),
      bc_(lattice, roles, BoundaryPhysics::Flow, rho0),
      tau_(tau),
      rho0_(rho0),
      alpha_(std::move(alpha)) {
  if (tau <= 0.5) throw ConfigError("tau must exceed 0.5");
  if (alpha_.size() != lattice_->size()) throw ConfigError("design field size does not match the grid");
  initialize();
}

void FlowSolver::set_alpha(Eigen::VectorXd alpha) {
  if (alpha.size() != lattice_->size()) throw ConfigError("design field size does not match the grid");
  alpha_ = std::move(alpha);
}

void FlowSolver::initialize() {
  const Index n = lattice_->size();
  f_ = equilibrium_field(*lattice_, Eigen::VectorXd::Constant(n, rho0_), Eigen::Matrix3Xd::Zero(3, n), alpha_, rho0_);
  scratch_.resize(f_.rows(), f_.cols());
}

void FlowSolver::step() {
  const double omega = 1.0 / tau_;
  const int* nbr = lattice_->neighbors().data();
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    constexpr int q = T::q;
    const double* f = f_.data();
    double* out = scratch_.data();
    const Index nn = lattice_->size();
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < nn; ++n) {
      double fc[q];
      detail::collide_node<T>(f + n * q, fc, alpha_[n], omega, rho0_);
      const int* nb = nbr + n * q;
      for (int i = 0; i < q; ++i) out[Index(nb[i]) * q + i] = fc[i];
    }
  });
  bc_.apply(scratch_, true);
  f_.swap(scratch_);
}

bool FlowSolver::diverged() const {
  const Eigen::VectorXd rho = f_.colwise().sum().transpose();
  if (!rho.allFinite() || !f_.allFinite()) return true;
  return ((rho.array() - rho0_).abs() > 10.0 * rho0_).any();
}


RunResult FlowSolver::run_to_steady(const RunOptions& options) {
  return detail::run_loop(*this, options, [this] { return Eigen::MatrixXd(macros().u); }, f_);
}

ThermalSolver::ThermalSolver(LatticePtr lattice, const NodeRoleMap& roles, ThermalParams params, Eigen::VectorXd alpha,
                             Eigen::Matrix3Xd u)
    : lattice_(lattice),
      bc_(lattice, roles, BoundaryPhysics::Thermal, 1.0, params.inlet_temperature),
      params_(params),
      alpha_(std::move(alpha)),
      u_(std::move(u)) {
  if (params_.tau_fluid <= 0.5 || params_.tau_solid <= 0.5) throw ConfigError("thermal relaxation times must exceed 0.5");
  if (lattice_->stencil().kind() != StencilKind::D3Q7 && lattice_->stencil().kind() != StencilKind::D2Q9)
    throw ConfigError("thermal solver expects a D3Q7 lattice");
  initialize();
}

void ThermalSolver::set_flow(Eigen::VectorXd alpha, Eigen::Matrix3Xd u) {
  if (alpha.size() != lattice_->size() || u.cols() != lattice_->size())
    throw ConfigError("flow field size does not match the grid");
  alpha_ = std::move(alpha);
  u_ = std::move(u);
}

void ThermalSolver::initialize() {
  const Stencil& s = lattice_->stencil();
  g_.resize(s.q(), lattice_->size());
  for (Index n = 0; n < lattice_->size(); ++n) g_.col(n) = s.weights() * params_.inlet_temperature;
  scratch_.resize(g_.rows(), g_.cols());
}

void ThermalSolver::step() {
  const int* nbr = lattice_->neighbors().data();
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    constexpr int q = T::q;
    const double* g = g_.data();
    double* out = scratch_.data();
    const Index nn = lattice_->size();
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < nn; ++n) {
      double gc[q];
      const double a = alpha_[n];
      detail::thermal_collide_node<T>(g + n * q, gc, u_.col(n).data(), a,
                                      thermal_rate(a, params_.tau_fluid, params_.tau_solid),
                                      heat_generation(a, params_.beta_max));
      const int* nb = nbr + n * q;
      for (int i = 0; i < q; ++i) out[Index(nb[i]) * q + i] = gc[i];
    }
  });
  bc_.apply(scratch_, true);
  g_.swap(scratch_);
}

bool ThermalSolver::diverged() const {
  if (!g_.allFinite()) return true;
  return (temperature().array().abs() > 1e3).any();
}

RunResult ThermalSolver::run_to_steady(const RunOptions& options) {
  return detail::run_loop(*this, options, [this] { return Eigen::MatrixXd(temperature()); }, g_);
}

}  // namespace lbtopo
