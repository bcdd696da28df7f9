#include "lbtopo/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lbtopo {

namespace {

/// Faces crossed by the link arriving at c along e (x − e outside the grid).
std::uint8_t crossed_faces(const GridGeometry& g, const Eigen::Vector3i& c, const Eigen::Vector3i& e) {
  std::uint8_t mask = 0;
  const Eigen::Vector3i p = c - e;
  for (int a = 0; a < g.dim(); ++a) {
    if (p[a] < 0) mask |= static_cast<std::uint8_t>(1u << (2 * a));
    if (p[a] >= g.extent(a)) mask |= static_cast<std::uint8_t>(1u << (2 * a + 1));
  }
  return mask;
}

int mirrored(const Stencil& s, int i, std::uint8_t faces) {
  Eigen::Vector3i e = s.velocity(i);
  for (int a = 0; a < 3; ++a)
    if (faces & (0b11u << (2 * a))) e[a] = -e[a];
  return s.index_of(e);
}

}  // namespace

BoundaryOperator::BoundaryOperator(LatticePtr lattice, const NodeRoleMap& roles, BoundaryPhysics physics,
                                   double rho0, double inlet_temperature)
    : lattice_(std::move(lattice)),
      nodes_(roles.boundary),
      physics_(physics),
      q_(static_cast<std::size_t>(lattice_->q())),
      rho0_(rho0),
      inlet_temperature_(inlet_temperature) {
  const GridGeometry& g = lattice_->geometry();
  const Stencil& s = lattice_->stencil();
  if (roles.geometry.dims() != g.dims()) throw ConfigError("role map does not match the lattice grid");
  const int q = s.q();

  zh_coeff_.resize(q_);
  for (int i = 0; i < q; ++i) zh_coeff_[static_cast<std::size_t>(i)] = 2.0 * s.weight(i) / s.cs2();
  axis_dir_pos_.assign(3, -1);
  axis_dir_neg_.assign(3, -1);
  for (int a = 0; a < s.dim(); ++a) {
    Eigen::Vector3i e = Eigen::Vector3i::Zero();
    e[a] = 1;
    axis_dir_pos_[static_cast<std::size_t>(a)] = s.index_of(e);
    axis_dir_neg_[static_cast<std::size_t>(a)] = s.index_of(-e);
  }

  plans_.resize(nodes_.size() * q_);
  inward_dir_.assign(nodes_.size(), -1);
  transverse_axis_.assign(nodes_.size(), -1);
  for (std::size_t b = 0; b < nodes_.size(); ++b) {
    const BoundaryNode& bn = nodes_[b];
    const Eigen::Vector3i c = g.coords(bn.node);
    if (bn.axis >= 0) {
      inward_dir_[b] = bn.inward > 0 ? axis_dir_pos_[static_cast<std::size_t>(bn.axis)]
                                     : axis_dir_neg_[static_cast<std::size_t>(bn.axis)];
      if (s.dim() == 2 && physics_ == BoundaryPhysics::Flow) transverse_axis_[b] = 1 - bn.axis;
    }
    for (int i = 0; i < q; ++i) {
      LinkPlan& plan = plans_[b * q_ + static_cast<std::size_t>(i)];
      const std::uint8_t crossed = crossed_faces(g, c, s.velocity(i));
      if (crossed == 0) {
        plan = {LinkAction::Keep, i};
        continue;
      }
      if (bn.axis >= 0 && s.e(i, bn.axis) * bn.inward > 0) {
        plan = {LinkAction::Open, s.opposite_index(i)};
      } else if (crossed & bn.wall_faces) {
        plan = {LinkAction::BounceBack, s.opposite_index(i)};
      } else if ((crossed & ~bn.symmetry_faces) == 0) {
        plan = {LinkAction::Specular, mirrored(s, i, crossed)};
      } else {
        std::ostringstream msg;
        msg << "no closure for direction " << i << " at " << to_string(bn.role) << " node " << bn.node;
        throw std::logic_error(msg.str());
      }
    }
  }
}

bool BoundaryOperator::is_unknown_open(std::size_t b, int i) const { return action(b, i) == LinkAction::Open; }

void BoundaryOperator::node_kernel(std::size_t b, const double* fs, double* out, bool affine) const {
  const BoundaryNode& bn = nodes_[b];
  const Stencil& s = lattice_->stencil();
  const int q = s.q();
  const Index n = bn.node;
  const double* own = fs + n * q;

  for (int i = 0; i < q; ++i) {
    const LinkPlan& plan = plans_[b * q_ + static_cast<std::size_t>(i)];
    switch (plan.action) {
      case LinkAction::Keep:
        out[i] = own[i];
        break;
      case LinkAction::BounceBack:
        out[i] = fs[lattice_->neighbor(n, plan.dir) * q + plan.dir];
        break;
      case LinkAction::Specular:
        out[i] = own[plan.dir];
        break;
      case LinkAction::Open:
        out[i] = 0.0;
        break;
    }
  }
  if (bn.axis < 0) return;

  // out now holds every known population; close the open-face unknowns.
  if (physics_ == BoundaryPhysics::Thermal) {
    if (bn.type == BoundaryType::PressureOutlet) {
      const Index up = lattice_->neighbor(n, inward_dir_[b]);
      for (int i = 0; i < q; ++i)
        if (action(b, i) == LinkAction::Open) out[i] = fs[up * q + i];
    } else {
      const double t_in = affine ? inlet_temperature_ : 0.0;
      for (int i = 0; i < q; ++i)
        if (action(b, i) == LinkAction::Open) out[i] = -out[source_direction(b, i)] + 2.0 * s.weight(i) * t_in;
    }
    return;
  }

  double tangential = 0.0;
  double outgoing = 0.0;
  for (int i = 0; i < q; ++i) {
    const int en = s.e(i, bn.axis) * bn.inward;
    if (en == 0) tangential += out[i];
    if (en < 0) outgoing += out[i];
  }
  double rho0_un = 0.0;
  if (bn.type == BoundaryType::VelocityInlet) {
    rho0_un = affine ? rho0_ * bn.value : 0.0;
  } else {
    rho0_un = (affine ? bn.value : 0.0) - (tangential + 2.0 * outgoing);
  }
  const int t = transverse_axis_[b];
  const double transverse =
      t >= 0 ? out[axis_dir_pos_[static_cast<std::size_t>(t)]] - out[axis_dir_neg_[static_cast<std::size_t>(t)]] : 0.0;
  for (int i = 0; i < q; ++i) {
    if (action(b, i) != LinkAction::Open) continue;
    double v = out[source_direction(b, i)] + zh_coeff_[static_cast<std::size_t>(i)] * rho0_un;
    if (t >= 0) v -= 0.5 * s.e(i, t) * transverse;
    out[i] = v;
  }
}

void BoundaryOperator::apply(PopulationField& f, bool affine) const {
  const int q = static_cast<int>(q_);
  Eigen::MatrixXd out(q, static_cast<Index>(nodes_.size()));
  const double* fs = f.data();
  for (std::size_t b = 0; b < nodes_.size(); ++b) node_kernel(b, fs, out.col(static_cast<Index>(b)).data(), affine);
  for (std::size_t b = 0; b < nodes_.size(); ++b) f.col(nodes_[b].node) = out.col(static_cast<Index>(b));
}

void BoundaryOperator::apply_transpose(PopulationField& y) const {
  const Stencil& s = lattice_->stencil();
  const int q = s.q();
  const auto nb = static_cast<Index>(nodes_.size());
  Eigen::MatrixXd Y(q, nb);
  for (Index b = 0; b < nb; ++b) Y.col(b) = y.col(nodes_[static_cast<std::size_t>(b)].node);
  for (Index b = 0; b < nb; ++b) y.col(nodes_[static_cast<std::size_t>(b)].node).setZero();

  Eigen::VectorXd yloc(q);
  for (std::size_t b = 0; b < nodes_.size(); ++b) {
    const BoundaryNode& bn = nodes_[b];
    const Index n = bn.node;
    const auto Yb = Y.col(static_cast<Index>(b));
    yloc = Yb;

    if (bn.axis >= 0) {
      for (int i = 0; i < q; ++i)
        if (action(b, i) == LinkAction::Open) yloc[i] = 0.0;
      if (physics_ == BoundaryPhysics::Thermal) {
        if (bn.type == BoundaryType::PressureOutlet) {
          const Index up = lattice_->neighbor(n, inward_dir_[b]);
          for (int i = 0; i < q; ++i)
            if (action(b, i) == LinkAction::Open) y(i, up) += Yb[i];
        } else {
          for (int i = 0; i < q; ++i)
            if (action(b, i) == LinkAction::Open) yloc[source_direction(b, i)] -= Yb[i];
        }
      } else {
        const int t = transverse_axis_[b];
        double kprime = 0.0;
        for (int i = 0; i < q; ++i) {
          if (action(b, i) != LinkAction::Open) continue;
          yloc[source_direction(b, i)] += Yb[i];
          kprime += zh_coeff_[static_cast<std::size_t>(i)] * Yb[i];
          if (t >= 0) {
            yloc[axis_dir_pos_[static_cast<std::size_t>(t)]] -= 0.5 * s.e(i, t) * Yb[i];
            yloc[axis_dir_neg_[static_cast<std::size_t>(t)]] += 0.5 * s.e(i, t) * Yb[i];
          }
        }
        if (bn.type != BoundaryType::VelocityInlet) {
          for (int j = 0; j < q; ++j) {
            const int en = s.e(j, bn.axis) * bn.inward;
            if (en == 0) yloc[j] -= kprime;
            if (en < 0) yloc[j] -= 2.0 * kprime;
          }
        }
      }
    }

    for (int i = 0; i < q; ++i) {
      const LinkPlan& plan = plans_[b * q_ + static_cast<std::size_t>(i)];
      switch (plan.action) {
        case LinkAction::Keep:
          y(i, n) += yloc[i];
          break;
        case LinkAction::BounceBack:
          y(plan.dir, lattice_->neighbor(n, plan.dir)) += yloc[i];
          break;
        case LinkAction::Specular:
          y(plan.dir, n) += yloc[i];
          break;
        case LinkAction::Open:
          break;
      }
    }
  }
}

BoundaryJacobian::BoundaryJacobian(const BoundaryOperator& op) : lattice_(op.lattice_ptr()) {
  const Lattice& lat = *lattice_;
  const int q = lat.q();
  const Index total = lat.size() * q;
  const auto& nodes = op.nodes();
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(total);
  Eigen::VectorXd out(q);
  std::vector<Index> candidates;
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const Index n = nodes[b].node;
    candidates.clear();
    candidates.push_back(n);
    for (int k = 1; k < q; ++k) candidates.push_back(lat.neighbor(n, k));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (Index m : candidates) {
      for (int d = 0; d < q; ++d) {
        const Index col = m * q + d;
        probe[col] = 1.0;
        op.node_kernel(b, probe.data(), out.data(), false);
        probe[col] = 0.0;
        for (int i = 0; i < q; ++i)
          if (out[i] != 0.0) triplets.emplace_back(static_cast<Index>(b) * q + i, col, out[i]);
      }
    }
    node_of_row_.push_back(n);
  }
  rows_.resize(static_cast<Index>(nodes.size()) * q, total);
  rows_.setFromTriplets(triplets.begin(), triplets.end());
  rows_.makeCompressed();
}

void BoundaryJacobian::apply(PopulationField& x) const {
  const int q = lattice_->q();
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
  const Eigen::VectorXd r = rows_ * xv;
  for (std::size_t b = 0; b < node_of_row_.size(); ++b)
    x.col(node_of_row_[b]) = r.segment(static_cast<Index>(b) * q, q);
}

void BoundaryJacobian::apply_transpose(PopulationField& y) const {
  const int q = lattice_->q();
  Eigen::VectorXd Y(rows_.rows());
  for (std::size_t b = 0; b < node_of_row_.size(); ++b) {
    Y.segment(static_cast<Index>(b) * q, q) = y.col(node_of_row_[b]);
    y.col(node_of_row_[b]).setZero();
  }
  Eigen::Map<Eigen::VectorXd> yv(y.data(), y.size());
  yv += rows_.transpose() * Y;
}

Eigen::MatrixXd BoundaryJacobian::local_block(std::size_t b) const {
  const int q = lattice_->q();
  const Index n = node_of_row_[b];
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    for (Matrix::InnerIterator it(rows_, static_cast<Index>(b) * q + i); it; ++it) {
      if (it.col() / q == n) block(i, it.col() % q) += it.value();
    }
  }
  return block;
}

double check_transpose_fast_path(const BoundaryOperator& op, const BoundaryJacobian& jac, int trials, unsigned seed,
                                 double tol) {
  const Lattice& lat = op.lattice();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    PopulationField y = PopulationField::NullaryExpr(lat.q(), lat.size(), [&] { return dist(rng); });
    PopulationField a = y;
    PopulationField m = y;
    op.apply_transpose(a);
    jac.apply_transpose(m);
    Index row = 0;
    Index col = 0;
    const double diff = (a - m).cwiseAbs().maxCoeff(&row, &col);
    if (diff > tol) {
      std::string where = "interior node";
      for (const auto& bn : op.nodes())
        if (bn.node == col) where = std::string(to_string(bn.role)) + " node (" + std::string(to_string(bn.type)) + ")";
      std::ostringstream msg;
      msg << "adjoint boundary fast path disagrees with the transposed Jacobian by " << diff << " at " << where << " "
          << col << ", direction " << row;
      throw std::logic_error(msg.str());
    }
    worst = std::max(worst, diff);
  }
  return worst;
}

}  // namespace lbtopo
