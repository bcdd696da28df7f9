#include "lbtopo/field.hpp"

namespace lbtopo {

Lattice::Lattice(GridGeometry geometry, StencilKind kind)
    : geometry_(std::move(geometry)), stencil_(make_stencil(kind)) {
  if (stencil_.dim() != geometry_.dim())
    throw ConfigError(std::string("stencil ") + std::string(to_string(kind)) + " does not match a " +
                      std::to_string(geometry_.dim()) + "D grid");
  const Index n = geometry_.size();
  neighbors_.resize(stencil_.q(), n);
  for (Index j = 0; j < n; ++j) {
    const Eigen::Vector3i c = geometry_.coords(j);
    for (int i = 0; i < stencil_.q(); ++i)
      neighbors_(i, j) = static_cast<int>(geometry_.index(geometry_.wrap(c + stencil_.velocity(i))));
  }
}

PopulationField stream(const Lattice& lat, const PopulationField& fc) {
  PopulationField fs(fc.rows(), fc.cols());
  const auto& nbr = lat.neighbors();
  for (Index n = 0; n < fc.cols(); ++n)
    for (int i = 0; i < fc.rows(); ++i) fs(i, nbr(i, n)) = fc(i, n);
  return fs;
}

PopulationField stream_reversed(const Lattice& lat, const PopulationField& f) {
  PopulationField out(f.rows(), f.cols());
  const auto& nbr = lat.neighbors();
  for (Index n = 0; n < f.cols(); ++n)
    for (int i = 0; i < f.rows(); ++i) out(i, n) = f(i, nbr(i, n));
  return out;
}

MacroFields moments(const Lattice& lat, const PopulationField& f, double rho0) {
  const Stencil& s = lat.stencil();
  MacroFields m;
  m.rho = f.colwise().sum().transpose();
  Eigen::Matrix3Xd e(3, s.q());
  for (int i = 0; i < s.q(); ++i) e.col(i) = s.velocity(i).cast<double>();
  m.u = (e * f) / rho0;
  m.T = m.rho;
  return m;
}

}  // namespace lbtopo
