#pragma once

// Per-node kernels compiled against constant stencil tables. Shared by the
// fused solver loops and the unfused reference functions so both produce
// bit-identical values.

#include <array>

#include "lbtopo/lattice.hpp"

namespace lbtopo::detail {

template <class T>
inline constexpr auto weights_v = [] {
  std::array<double, T::q> w{};
  for (int i = 0; i < T::q; ++i)
    w[static_cast<std::size_t>(i)] = static_cast<double>(T::w_exact[static_cast<std::size_t>(i)].num) /
                                     static_cast<double>(T::w_exact[static_cast<std::size_t>(i)].den);
  return w;
}();

template <class T>
inline constexpr double ex(int i, int a) {
  return T::e[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
}

/// Moment velocity u = Σ e f / ρ0 of one node.
template <class T>
inline void node_velocity(const double* f, double rho0, double* u) {
  double j[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < T::q; ++i)
    for (int a = 0; a < 3; ++a) j[a] += ex<T>(i, a) * f[i];
  for (int a = 0; a < 3; ++a) u[a] = j[a] / rho0;
}

/// BGK collision of one node with the extended equilibrium.
template <class T>
inline void collide_node(const double* f, double* fc, double alpha, double omega, double rho0) {
  constexpr auto& w = weights_v<T>;
  double rho = 0.0;
  double j[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < T::q; ++i) {
    rho += f[i];
    for (int a = 0; a < 3; ++a) j[a] += ex<T>(i, a) * f[i];
  }
  const double v[3] = {alpha * j[0] / rho0, alpha * j[1] / rho0, alpha * j[2] / rho0};
  const double usq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  for (int i = 0; i < T::q; ++i) {
    const double eu = ex<T>(i, 0) * v[0] + ex<T>(i, 1) * v[1] + ex<T>(i, 2) * v[2];
    const double feq = w[static_cast<std::size_t>(i)] * (rho + rho0 * (3.0 * eu + 4.5 * eu * eu - 1.5 * usq));
    fc[i] = f[i] - omega * (f[i] - feq);
  }
}

/// Tangent of the collision: δf_C = δf − ω(δf − J δf), J the equilibrium Jacobian at (u, α).
template <class T>
inline void collide_tangent_node(const double* df, double* out, const double* u, double alpha, double omega) {
  constexpr auto& w = weights_v<T>;
  double drho = 0.0;
  double dj[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < T::q; ++i) {
    drho += df[i];
    for (int a = 0; a < 3; ++a) dj[a] += ex<T>(i, a) * df[i];
  }
  const double udj = u[0] * dj[0] + u[1] * dj[1] + u[2] * dj[2];
  for (int m = 0; m < T::q; ++m) {
    const double emu = ex<T>(m, 0) * u[0] + ex<T>(m, 1) * u[1] + ex<T>(m, 2) * u[2];
    const double emdj = ex<T>(m, 0) * dj[0] + ex<T>(m, 1) * dj[1] + ex<T>(m, 2) * dj[2];
    const double jd = w[static_cast<std::size_t>(m)] *
                      (drho + 3.0 * alpha * emdj + 9.0 * alpha * alpha * emu * emdj - 3.0 * alpha * alpha * udj);
    out[m] = df[m] - omega * (df[m] - jd);
  }
}

/// Transposed collision: out_i = y_i − ω(y_i − Σ_m J_mi y_m).
template <class T>
inline void adjoint_collide_node(const double* y, double* out, const double* u, double alpha, double omega) {
  constexpr auto& w = weights_v<T>;
  double a0 = 0.0;
  double m1[3] = {0.0, 0.0, 0.0};
  double m2[3] = {0.0, 0.0, 0.0};
  for (int m = 0; m < T::q; ++m) {
    const double wy = w[static_cast<std::size_t>(m)] * y[m];
    const double emu = ex<T>(m, 0) * u[0] + ex<T>(m, 1) * u[1] + ex<T>(m, 2) * u[2];
    a0 += wy;
    for (int a = 0; a < 3; ++a) {
      m1[a] += wy * ex<T>(m, a);
      m2[a] += wy * emu * ex<T>(m, a);
    }
  }
  for (int i = 0; i < T::q; ++i) {
    const double e1 = ex<T>(i, 0) * m1[0] + ex<T>(i, 1) * m1[1] + ex<T>(i, 2) * m1[2];
    const double e2 = ex<T>(i, 0) * m2[0] + ex<T>(i, 1) * m2[1] + ex<T>(i, 2) * m2[2];
    const double ue = ex<T>(i, 0) * u[0] + ex<T>(i, 1) * u[1] + ex<T>(i, 2) * u[2];
    const double s = a0 + 3.0 * alpha * e1 + 9.0 * alpha * alpha * e2 - 3.0 * alpha * alpha * ue * a0;
    out[i] = y[i] - omega * (y[i] - s);
  }
}

/// Thermal collision with source: g_C = g − r(g − g^eq) + ω Q.
template <class T>
inline void thermal_collide_node(const double* g, double* gc, const double* u, double alpha, double rate,
                                 double beta) {
  constexpr auto& w = weights_v<T>;
  constexpr double inv_cs2 = static_cast<double>(T::cs2_exact.den) / static_cast<double>(T::cs2_exact.num);
  double temp = 0.0;
  for (int i = 0; i < T::q; ++i) temp += g[i];
  const double q_src = beta * (1.0 - temp);
  for (int i = 0; i < T::q; ++i) {
    const double eu = ex<T>(i, 0) * u[0] + ex<T>(i, 1) * u[1] + ex<T>(i, 2) * u[2];
    const double geq = w[static_cast<std::size_t>(i)] * temp * (1.0 + inv_cs2 * alpha * eu);
    gc[i] = g[i] - rate * (g[i] - geq) + w[static_cast<std::size_t>(i)] * q_src;
  }
}

/// Transposed thermal collision: out_i = y_i − r(y_i − Σ_m ω_m(1 + e_m·αu/cs2) y_m) − β Σ_m ω_m y_m.
template <class T>
inline void thermal_adjoint_collide_node(const double* y, double* out, const double* u, double alpha, double rate,
                                         double beta) {
  constexpr auto& w = weights_v<T>;
  constexpr double inv_cs2 = static_cast<double>(T::cs2_exact.den) / static_cast<double>(T::cs2_exact.num);
  double s_eq = 0.0;
  double s_w = 0.0;
  for (int m = 0; m < T::q; ++m) {
    const double eu = ex<T>(m, 0) * u[0] + ex<T>(m, 1) * u[1] + ex<T>(m, 2) * u[2];
    s_eq += w[static_cast<std::size_t>(m)] * (1.0 + inv_cs2 * alpha * eu) * y[m];
    s_w += w[static_cast<std::size_t>(m)] * y[m];
  }
  for (int i = 0; i < T::q; ++i) out[i] = y[i] - rate * (y[i] - s_eq) - beta * s_w;
}

}  // namespace lbtopo::detail
