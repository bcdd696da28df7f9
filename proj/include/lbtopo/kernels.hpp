#pragma once

#include <utility>

#include <Eigen/Core>

#include "lbtopo/lattice.hpp"

namespace lbtopo {

/// Velocity bracket of the extended equilibrium for one direction,
/// 3 e·v + 9/2 (e·v)² − 3/2 |v|² with v = αu.
template <typename Scalar>
Scalar equilibrium_bracket(const Eigen::Vector3i& e, const Eigen::Matrix<Scalar, 3, 1>& v) {
  const Scalar eu = e.cast<Scalar>().dot(v);
  return Scalar(3) * eu + Scalar(4.5) * eu * eu - Scalar(1.5) * v.squaredNorm();
}

/// Incompressible extended equilibrium f_i^eq(ρ, u; α) for every direction.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> equilibrium(Scalar rho, const Eigen::Matrix<Scalar, 3, 1>& u, Scalar alpha,
                                                     const Stencil& s, Scalar rho0 = Scalar(1)) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> feq(s.q());
  const Eigen::Matrix<Scalar, 3, 1> v = alpha * u;
  for (int i = 0; i < s.q(); ++i)
    feq[i] = Scalar(s.weight(i)) * (rho + rho0 * equilibrium_bracket(s.velocity(i), v));
  return feq;
}

/// Node moments ρ = Σ f and u = Σ e f / ρ₀.
template <typename Derived>
auto node_moments(const Eigen::MatrixBase<Derived>& f, const Stencil& s, typename Derived::Scalar rho0 = 1) {
  using Scalar = typename Derived::Scalar;
  Scalar rho(0);
  Eigen::Matrix<Scalar, 3, 1> j = Eigen::Matrix<Scalar, 3, 1>::Zero();
  for (int i = 0; i < s.q(); ++i) {
    rho += f[i];
    j += s.velocity(i).cast<Scalar>() * f[i];
  }
  return std::pair<Scalar, Eigen::Matrix<Scalar, 3, 1>>{rho, j / rho0};
}

/// Dense equilibrium Jacobian, entry (m, i) = ∂f_m^eq/∂f_i
/// = ω_m[1 + 3α e_m·e_i + 9α²(e_m·u)(e_m·e_i) − 3α² u·e_i].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> equilibrium_jacobian(const Eigen::Matrix<Scalar, 3, 1>& u,
                                                                            Scalar alpha, const Stencil& s) {
  const int q = s.q();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> jac(q, q);
  for (int m = 0; m < q; ++m) {
    const Eigen::Matrix<Scalar, 3, 1> em = s.velocity(m).cast<Scalar>();
    const Scalar emu = em.dot(u);
    for (int i = 0; i < q; ++i) {
      const Eigen::Matrix<Scalar, 3, 1> ei = s.velocity(i).cast<Scalar>();
      const Scalar emei = em.dot(ei);
      jac(m, i) = Scalar(s.weight(m)) *
                  (Scalar(1) + Scalar(3) * alpha * emei + Scalar(9) * alpha * alpha * emu * emei -
                   Scalar(3) * alpha * alpha * u.dot(ei));
    }
  }
  return jac;
}

/// ∂f_i^eq/∂α at fixed populations (exact tangent), ω_i ρ₀[3 e·u + 9α(e·u)² − 3α|u|²].
template <typename Scalar>
Scalar equilibrium_alpha_tangent(const Eigen::Vector3i& e, const Eigen::Matrix<Scalar, 3, 1>& u, Scalar alpha,
                                 Scalar w, Scalar rho0 = Scalar(1)) {
  const Scalar eu = e.cast<Scalar>().dot(u);
  return w * rho0 * (Scalar(3) * eu + Scalar(9) * alpha * eu * eu - Scalar(3) * alpha * u.squaredNorm());
}

/// Thermal equilibrium g_i^eq = ω_i T (1 + e_i·αu / cs2).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> thermal_equilibrium(Scalar T, const Eigen::Matrix<Scalar, 3, 1>& u,
                                                             Scalar alpha, const Stencil& s) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> geq(s.q());
  const Scalar inv_cs2 = Scalar(1) / Scalar(s.cs2());
  for (int i = 0; i < s.q(); ++i)
    geq[i] = Scalar(s.weight(i)) * T * (Scalar(1) + inv_cs2 * alpha * s.velocity(i).cast<Scalar>().dot(u));
  return geq;
}

/// Heat generation coefficient β'(α) = β'_max (1 − α).
template <typename Scalar>
Scalar heat_generation(Scalar alpha, Scalar beta_max) {
  return beta_max * (Scalar(1) - alpha);
}

/// Thermal relaxation rate interpolated linearly in α between solid and fluid.
template <typename Scalar>
Scalar thermal_rate(Scalar alpha, Scalar tau_fluid, Scalar tau_solid) {
  return Scalar(1) / tau_solid + alpha * (Scalar(1) / tau_fluid - Scalar(1) / tau_solid);
}

}  // namespace lbtopo
