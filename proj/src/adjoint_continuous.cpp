#include "lbtopo/adjoint_continuous.hpp"

#include <cmath>

#include "node_ops.hpp"
#include "run_loop.hpp"

namespace lbtopo {

ContinuousFlowAdjoint::ContinuousFlowAdjoint(const FlowSolver& forward, const NodeRoleMap& roles, double source_scale)
    : lattice_(forward.boundary().lattice_ptr()),
      bc_(forward.boundary()),
      alpha_(forward.alpha()),
      u_(forward.macros().u),
      tau_(forward.tau()),
      s_(source_scale),
      inv_area_(roles.inlet_area() > 0 ? 1.0 / roles.inlet_area() : 0.0) {
  const BoundaryJacobian jac(bc_);
  for (std::size_t b = 0; b < bc_.nodes().size(); ++b) {
    const BoundaryNode& bn = bc_.nodes()[b];
    if (bn.role != NodeRole::Inlet && bn.role != NodeRole::Outlet) continue;
    if (bn.type == BoundaryType::PressureInlet)
      throw ConfigError("continuous adjoint supports velocity inlets only");
    open_.push_back({b, bn.role == NodeRole::Inlet, jac.local_block(b)});
  }
  reset();
}

void ContinuousFlowAdjoint::reset() {
  f_ = PopulationField::Zero(lattice_->q(), lattice_->size());
  scratch_ = f_;
}

void ContinuousFlowAdjoint::collide(PopulationField& f) const {
  const double omega = 1.0 / tau_;
  dispatch_stencil(lattice_->stencil().kind(), [&](auto traits) {
    using T = decltype(traits);
    double tmp[T::q];
    for (Index n = 0; n < f.cols(); ++n) {
      detail::adjoint_collide_node<T>(f.data() + n * T::q, tmp, u_.col(n).data(), alpha_[n], omega);
      for (int i = 0; i < T::q; ++i) f(i, n) = tmp[i];
    }
  });
}

void ContinuousFlowAdjoint::apply_boundaries(PopulationField& f) const {
  const Stencil& s = lattice_->stencil();
  const int q = s.q();
  const auto& nodes = bc_.nodes();
  Eigen::MatrixXd out(q, static_cast<Index>(nodes.size()));
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const BoundaryNode& bn = nodes[b];
    const Index n = bn.node;
    auto ob = out.col(static_cast<Index>(b));
    ob = f.col(n);
    double k_out = 0.0;
    if (bn.role == NodeRole::Outlet) {
      for (int j = 0; j < q; ++j)
        if (bc_.action(b, j) == LinkAction::Open) k_out += 4.0 * s.weight(j) / s.cs2() * f(j, n);
    }
    for (int k = 0; k < q; ++k) {
      const int kb = s.opposite_index(k);
      switch (bc_.action(b, kb)) {
        case LinkAction::Keep:
          break;
        case LinkAction::BounceBack:
          ob[k] = f(kb, lattice_->neighbor(n, k));
          break;
        case LinkAction::Specular:
          ob[k] = f(s.opposite_index(bc_.source_direction(b, kb)), n);
          break;
        case LinkAction::Open:
          ob[k] = f(kb, n) - (bn.role == NodeRole::Inlet ? s_ : k_out);
          break;
      }
    }
  }
  for (std::size_t b = 0; b < nodes.size(); ++b) f.col(nodes[b].node) = out.col(static_cast<Index>(b));
}

double ContinuousFlowAdjoint::inconsistency(const PopulationField& f) const {
  const Stencil& s = lattice_->stencil();
  const int q = s.q();
  double worst = 0.0;
  for (const OpenNode& o : open_) {
    const BoundaryNode& bn = bc_.nodes()[o.b];
    for (int k = 0; k < q; ++k) {
      if (s.e(k, bn.axis) != 0) continue;
      double col_sum = 0.0;
      double r = 0.0;
      for (int j = 0; j < q; ++j) {
        if (bc_.action(o.b, j) != LinkAction::Open) continue;
        col_sum += o.block(j, k);
        r -= s.e(j, bn.axis) * bn.inward * f(j, bn.node) * o.block(j, k);
      }
      if (o.inlet) r += inv_area_ / 3.0 * (1.0 + col_sum);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

void ContinuousFlowAdjoint::step() {
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
      double c[q];
      detail::adjoint_collide_node<T>(f + n * q, c, u_.col(n).data(), alpha_[n], omega);
      const int* nb = nbr + n * q;
      // out_i(x) = c_i(x + e_i): node n feeds x = n − e_i, the neighbour along ī.
      for (int i = 0; i < q; ++i) out[Index(nb[T::opposite[static_cast<std::size_t>(i)]]) * q + i] = c[i];
    }
  });
  apply_boundaries(scratch_);
  f_.swap(scratch_);
  window_max_ = std::max(window_max_, inconsistency(f_));
}

bool ContinuousFlowAdjoint::diverged() const {
  if (!f_.allFinite()) return true;
  return f_.size() > 0 && f_.cwiseAbs().maxCoeff() > limit_;
}

RunResult ContinuousFlowAdjoint::run(const AdjointRunOptions& options) {
  limit_ = options.divergence_limit;
  window_residuals_.clear();
  window_max_ = 0.0;
  RunOptions o;
  o.tol = options.tol;
  o.max_steps = options.max_steps;
  o.window = options.window;
  o.min_steps = options.min_steps;
  o.pair_average = options.pair_average;
  bool started = false;
  return detail::run_loop(
      *this, o,
      [this, &started] {
        if (started) window_residuals_.push_back(window_max_);
        started = true;
        window_max_ = 0.0;
        return Eigen::MatrixXd(f_);
      },
      f_);
}

}  // namespace lbtopo
