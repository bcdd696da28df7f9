#include "lbtopo/lattice.hpp"

#include <numeric>

namespace lbtopo {

std::string_view to_string(StencilKind kind) {
  switch (kind) {
    case StencilKind::D2Q9:
      return "D2Q9";
    case StencilKind::D3Q19:
      return "D3Q19";
    case StencilKind::D3Q7:
      return "D3Q7";
  }
  return "unknown";
}

StencilKind parse_stencil_kind(std::string_view name) {
  if (name == "D2Q9") return StencilKind::D2Q9;
  if (name == "D3Q19") return StencilKind::D3Q19;
  if (name == "D3Q7") return StencilKind::D3Q7;
  throw ConfigError("unknown stencil kind '" + std::string(name) + "'");
}

Rational normalized(Rational r) {
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  const std::int64_t g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  if (r.num == 0) r.den = 1;
  return r;
}

Rational operator+(Rational a, Rational b) { return normalized({a.num * b.den + b.num * a.den, a.den * b.den}); }

Rational operator*(Rational a, Rational b) { return normalized({a.num * b.num, a.den * b.den}); }

template <StencilKind K>
Stencil make_stencil_from_traits() {
  using T = StencilTraits<K>;
  Stencil s;
  s.kind_ = K;
  s.dim_ = T::dim;
  s.q_ = T::q;
  s.cs2_exact_ = T::cs2_exact;
  s.cs2_ = T::cs2_exact.value();
  s.weights_.resize(T::q);
  for (int i = 0; i < T::q; ++i) {
    const auto& v = T::e[static_cast<std::size_t>(i)];
    s.velocities_.emplace_back(v[0], v[1], v[2]);
    s.weights_exact_.push_back(T::w_exact[static_cast<std::size_t>(i)]);
    s.weights_[i] = T::w_exact[static_cast<std::size_t>(i)].value();
    s.opposite_.push_back(T::opposite[static_cast<std::size_t>(i)]);
  }
  return s;
}

Stencil make_stencil(StencilKind kind) {
  switch (kind) {
    case StencilKind::D2Q9:
      return make_stencil_from_traits<StencilKind::D2Q9>();
    case StencilKind::D3Q19:
      return make_stencil_from_traits<StencilKind::D3Q19>();
    case StencilKind::D3Q7:
      return make_stencil_from_traits<StencilKind::D3Q7>();
  }
  throw ConfigError("unknown stencil kind");
}

int Stencil::opposite_index(int i) const {
  if (i < 0 || i >= q_) throw std::out_of_range("direction index " + std::to_string(i) + " out of range");
  return opposite_[static_cast<std::size_t>(i)];
}

int Stencil::index_of(const Eigen::Vector3i& v) const {
  for (int i = 0; i < q_; ++i)
    if (velocities_[static_cast<std::size_t>(i)] == v) return i;
  return -1;
}

}  // namespace lbtopo
