#pragma once

#include <memory>

#include <Eigen/Core>

#include "lbtopo/domain.hpp"
#include "lbtopo/lattice.hpp"

namespace lbtopo {

/// q × N populations, the q values of one node contiguous.
using PopulationField = Eigen::MatrixXd;

struct MacroFields {
  Eigen::VectorXd rho;
  Eigen::Matrix3Xd u;
  /// Temperature, thermal populations only.
  Eigen::VectorXd T;
};

/// Grid plus stencil plus the wrapped neighbour table nbr(i, n) = wrap(x_n + e_i).
class Lattice {
 public:
  Lattice(GridGeometry geometry, StencilKind kind);

  [[nodiscard]] const GridGeometry& geometry() const { return geometry_; }
  [[nodiscard]] const Stencil& stencil() const { return stencil_; }
  [[nodiscard]] int q() const { return stencil_.q(); }
  [[nodiscard]] Index size() const { return geometry_.size(); }
  [[nodiscard]] Index neighbor(Index n, int i) const { return neighbors_(i, n); }
  [[nodiscard]] const Eigen::MatrixXi& neighbors() const { return neighbors_; }

 private:
  GridGeometry geometry_;
  Stencil stencil_;
  Eigen::MatrixXi neighbors_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

inline LatticePtr make_lattice(const GridGeometry& g, StencilKind kind) { return std::make_shared<const Lattice>(g, kind); }

/// Periodic streaming f_S,i(x + e_i) = f_C,i(x).
PopulationField stream(const Lattice& lat, const PopulationField& fc);

/// Reversed streaming out_i(x) = f_i(x + e_i); the exact inverse of `stream`.
PopulationField stream_reversed(const Lattice& lat, const PopulationField& f);

/// Per-node ρ, u (and T = ρ for thermal use).
MacroFields moments(const Lattice& lat, const PopulationField& f, double rho0 = 1.0);

}  // namespace lbtopo
