#include "lbtopo/adjoint_discrete.hpp"

#include "node_ops.hpp"
#include "run_loop.hpp"

namespace lbtopo {

namespace {

bool adjoint_diverged(const PopulationField& y, double limit) {
  if (!y.allFinite()) return true;
  return y.size() > 0 && y.cwiseAbs().maxCoeff() > limit;
}

}  // namespace

DiscreteFlowAdjoint::DiscreteFlowAdjoint(const FlowSolver& forward, Eigen::VectorXd objective_weights,
                                         BoundaryTranspose path, bool check_boundary)
    : lattice_(forward.boundary().lattice_ptr()),
      bc_(forward.boundary()),
      path_(path),
      alpha_(forward.alpha()),
      u_(forward.macros().u),
      tau_(forward.tau()),
      weights_(std::move(objective_weights)) {
  if (weights_.size() == 0) weights_ = Eigen::VectorXd::Zero(lattice_->size());
  if (weights_.size() != lattice_->size()) throw ConfigError("objective weights do not match the grid");
  if (path_ == BoundaryTranspose::Mechanical || check_boundary)
    jacobian_ = std::make_shared<const BoundaryJacobian>(bc_);
  if (check_boundary) check_error_ = check_transpose_fast_path(bc_, *jacobian_, 2, 12345u);
  reset();
}

void DiscreteFlowAdjoint::set_coupling(PopulationField coupling) {
  if (coupling.size() != 0 && (coupling.rows() != lattice_->q() || coupling.cols() != lattice_->size()))
    throw ConfigError("coupling field does not match the flow lattice");
  coupling_ = std::move(coupling);
}

void DiscreteFlowAdjoint::reset() {
  y_ = PopulationField::Zero(lattice_->q(), lattice_->size());
  fstar_ = y_;
  fs_ = y_;
}

void DiscreteFlowAdjoint::boundary_transpose(PopulationField& y) const {
  if (path_ == BoundaryTranspose::Mechanical)
    jacobian_->apply_transpose(y);
  else
    bc_.apply_transpose(y);
}

PopulationField DiscreteFlowAdjoint::collide_transpose(const PopulationField& fs) const {
  PopulationField out(fs.rows(), fs.cols());
  const double omega = 1.0 / tau_;
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    for (Index n = 0; n < fs.cols(); ++n)
      detail::adjoint_collide_node<T>(fs.data() + n * T::q, out.data() + n * T::q, u_.col(n).data(), alpha_[n], omega);
  });
  return out;
}

void DiscreteFlowAdjoint::step() {
  fstar_ = y_;
  boundary_transpose(fstar_);
  const double omega = 1.0 / tau_;
  const int* nbr = lattice_->neighbors().data();
  const bool coupled = coupling_.size() != 0;
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    constexpr int q = T::q;
    const double* fstar = fstar_.data();
    double* fs = fs_.data();
    double* y = y_.data();
    const Index nn = lattice_->size();
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < nn; ++n) {
      const int* nb = nbr + n * q;
      double* fsn = fs + n * q;
      for (int i = 0; i < q; ++i) fsn[i] = fstar[Index(nb[i]) * q + i];
      double* yn = y + n * q;
      detail::adjoint_collide_node<T>(fsn, yn, u_.col(n).data(), alpha_[n], omega);
      const double src = weights_[n];
      for (int i = 0; i < q; ++i) yn[i] -= src;
      if (coupled)
        for (int i = 0; i < q; ++i) yn[i] += coupling_(i, n);
    }
  });
}

bool DiscreteFlowAdjoint::diverged() const { return adjoint_diverged(y_, limit_); }

RunResult DiscreteFlowAdjoint::run(const AdjointRunOptions& options) {
  limit_ = options.divergence_limit;
  RunOptions o;
  o.tol = options.tol;
  o.max_steps = options.max_steps;
  o.window = options.window;
  o.min_steps = options.min_steps;
  o.pair_average = options.pair_average;
  return detail::run_loop(*this, o, [this] { return Eigen::MatrixXd(y_); }, y_);
}

DiscreteThermalAdjoint::DiscreteThermalAdjoint(const ThermalSolver& forward, BoundaryTranspose path,
                                               bool check_boundary)
    : lattice_(forward.boundary().lattice_ptr()),
      bc_(forward.boundary()),
      path_(path),
      alpha_(forward.alpha()),
      u_(forward.velocity()) {
  const ThermalParams& p = forward.params();
  rate_.resize(alpha_.size());
  beta_.resize(alpha_.size());
  for (Index n = 0; n < alpha_.size(); ++n) {
    rate_[n] = thermal_rate(alpha_[n], p.tau_fluid, p.tau_solid);
    beta_[n] = heat_generation(alpha_[n], p.beta_max);
  }
  if (path_ == BoundaryTranspose::Mechanical || check_boundary)
    jacobian_ = std::make_shared<const BoundaryJacobian>(bc_);
  if (check_boundary) check_error_ = check_transpose_fast_path(bc_, *jacobian_, 2, 54321u);
  reset();
}

void DiscreteThermalAdjoint::reset() {
  y_ = PopulationField::Zero(lattice_->q(), lattice_->size());
  gstar_ = y_;
  gs_ = y_;
}

void DiscreteThermalAdjoint::boundary_transpose(PopulationField& y) const {
  if (path_ == BoundaryTranspose::Mechanical)
    jacobian_->apply_transpose(y);
  else
    bc_.apply_transpose(y);
}

PopulationField DiscreteThermalAdjoint::collide_transpose(const PopulationField& gs) const {
  PopulationField out(gs.rows(), gs.cols());
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    for (Index n = 0; n < gs.cols(); ++n)
      detail::thermal_adjoint_collide_node<T>(gs.data() + n * T::q, out.data() + n * T::q, u_.col(n).data(),
                                              alpha_[n], rate_[n], beta_[n]);
  });
  return out;
}

void DiscreteThermalAdjoint::step() {
  gstar_ = y_;
  boundary_transpose(gstar_);
  const int* nbr = lattice_->neighbors().data();
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    constexpr int q = T::q;
    const double* gstar = gstar_.data();
    double* gs = gs_.data();
    double* y = y_.data();
    const Index nn = lattice_->size();
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < nn; ++n) {
      const int* nb = nbr + n * q;
      double* gsn = gs + n * q;
      for (int i = 0; i < q; ++i) gsn[i] = gstar[Index(nb[i]) * q + i];
      double* yn = y + n * q;
      detail::thermal_adjoint_collide_node<T>(gsn, yn, u_.col(n).data(), alpha_[n], rate_[n], beta_[n]);
      for (int i = 0; i < q; ++i) yn[i] -= beta_[n];
    }
  });
}

bool DiscreteThermalAdjoint::diverged() const { return adjoint_diverged(y_, limit_); }

RunResult DiscreteThermalAdjoint::run(const AdjointRunOptions& options) {
  limit_ = options.divergence_limit;
  RunOptions o;
  o.tol = options.tol;
  o.max_steps = options.max_steps;
  o.window = options.window;
  o.min_steps = options.min_steps;
  o.pair_average = options.pair_average;
  return detail::run_loop(*this, o, [this] { return Eigen::MatrixXd(y_); }, y_);
}

PopulationField flow_adjoint_coupling(const Lattice& flow, const Lattice& thermal, const PopulationField& gstar_S,
                                      const Eigen::VectorXd& T, const Eigen::VectorXd& alpha, const ThermalParams& params,
                                      double rho0) {
  if (flow.size() != thermal.size()) throw ConfigError("flow and thermal lattices differ in size");
  const Stencil& sf = flow.stencil();
  const Stencil& sg = thermal.stencil();
  PopulationField c(sf.q(), flow.size());
  for (Index n = 0; n < flow.size(); ++n) {
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    for (int m = 0; m < sg.q(); ++m) v += sg.weight(m) * sg.velocity(m).cast<double>() * gstar_S(m, n);
    const double scale =
        thermal_rate(alpha[n], params.tau_fluid, params.tau_solid) * T[n] * alpha[n] / (sg.cs2() * rho0);
    for (int i = 0; i < sf.q(); ++i) c(i, n) = scale * sf.velocity(i).cast<double>().dot(v);
  }
  return c;
}

}  // namespace lbtopo
