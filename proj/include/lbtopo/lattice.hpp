#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lbtopo {

/// Thrown for invalid user-facing configuration (bad keys, out-of-range values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StencilKind { D2Q9, D3Q19, D3Q7 };

std::string_view to_string(StencilKind kind);
StencilKind parse_stencil_kind(std::string_view name);

/// Exact rational number, used for the stencil weights so that the moment
/// identities can be checked without rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

Rational operator+(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
Rational normalized(Rational r);

// Compile-time stencil tables. Direction ordering is a frozen contract: every
// boundary closure (Zou-He inlet/outlet, their adjoints) is written against it.
//
// D2Q9:  0 rest; 1 +x; 2 +y; 3 -x; 4 -y; 5 (+1,+1); 6 (-1,+1); 7 (-1,-1); 8 (+1,-1)
// D3Q19: 0 rest; 1 +x; 2 -x; 3 +y; 4 -y; 5 +z; 6 -z;
//        7 (+1,+1,0)  8 (-1,+1,0)  9 (+1,-1,0) 10 (-1,-1,0)
//       11 (+1,0,+1) 12 (-1,0,+1) 13 (+1,0,-1) 14 (-1,0,-1)
//       15 (0,+1,+1) 16 (0,-1,+1) 17 (0,+1,-1) 18 (0,-1,-1)
// D3Q7:  first seven directions of D3Q19.
template <StencilKind K>
struct StencilTraits;

template <>
struct StencilTraits<StencilKind::D2Q9> {
  static constexpr StencilKind kind = StencilKind::D2Q9;
  static constexpr int dim = 2;
  static constexpr int q = 9;
  static constexpr std::array<std::array<int, 3>, 9> e{{
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0},
      {1, 1, 0}, {-1, 1, 0}, {-1, -1, 0}, {1, -1, 0},
  }};
  static constexpr std::array<int, 9> opposite{0, 3, 4, 1, 2, 7, 8, 5, 6};
  static constexpr std::array<Rational, 9> w_exact{{
      {4, 9}, {1, 9}, {1, 9}, {1, 9}, {1, 9}, {1, 36}, {1, 36}, {1, 36}, {1, 36},
  }};
  static constexpr Rational cs2_exact{1, 3};
};

template <>
struct StencilTraits<StencilKind::D3Q19> {
  static constexpr StencilKind kind = StencilKind::D3Q19;
  static constexpr int dim = 3;
  static constexpr int q = 19;
  static constexpr std::array<std::array<int, 3>, 19> e{{
      {0, 0, 0},  {1, 0, 0},  {-1, 0, 0}, {0, 1, 0},  {0, -1, 0}, {0, 0, 1},  {0, 0, -1},
      {1, 1, 0},  {-1, 1, 0}, {1, -1, 0}, {-1, -1, 0}, {1, 0, 1}, {-1, 0, 1}, {1, 0, -1},
      {-1, 0, -1}, {0, 1, 1}, {0, -1, 1}, {0, 1, -1}, {0, -1, -1},
  }};
  static constexpr std::array<int, 19> opposite{0, 2, 1, 4, 3, 6, 5, 10, 9, 8, 7, 14, 13, 12, 11, 18, 17, 16, 15};
  static constexpr std::array<Rational, 19> w_exact{{
      {1, 3},  {1, 18}, {1, 18}, {1, 18}, {1, 18}, {1, 18}, {1, 18}, {1, 36}, {1, 36}, {1, 36},
      {1, 36}, {1, 36}, {1, 36}, {1, 36}, {1, 36}, {1, 36}, {1, 36}, {1, 36}, {1, 36},
  }};
  static constexpr Rational cs2_exact{1, 3};
};

template <>
struct StencilTraits<StencilKind::D3Q7> {
  static constexpr StencilKind kind = StencilKind::D3Q7;
  static constexpr int dim = 3;
  static constexpr int q = 7;
  static constexpr std::array<std::array<int, 3>, 7> e{{
      {0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
  }};
  static constexpr std::array<int, 7> opposite{0, 2, 1, 4, 3, 6, 5};
  static constexpr std::array<Rational, 7> w_exact{{
      {1, 4}, {1, 8}, {1, 8}, {1, 8}, {1, 8}, {1, 8}, {1, 8},
  }};
  static constexpr Rational cs2_exact{1, 4};
};

/// Runtime view of a discrete velocity set.
class Stencil {
 public:
  [[nodiscard]] StencilKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int q() const { return q_; }
  [[nodiscard]] double cs2() const { return cs2_; }
  [[nodiscard]] Rational cs2_exact() const { return cs2_exact_; }

  [[nodiscard]] const Eigen::Vector3i& velocity(int i) const { return velocities_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int e(int i, int axis) const { return velocities_[static_cast<std::size_t>(i)][axis]; }
  [[nodiscard]] double weight(int i) const { return weights_[i]; }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
  [[nodiscard]] Rational weight_exact(int i) const { return weights_exact_[static_cast<std::size_t>(i)]; }

  /// Index of the direction with e = -e_i. Throws std::out_of_range for a bad index.
  [[nodiscard]] int opposite_index(int i) const;

  /// Index of the direction with the given velocity, or -1.
  [[nodiscard]] int index_of(const Eigen::Vector3i& v) const;

 private:
  template <StencilKind K>
  friend Stencil make_stencil_from_traits();

  StencilKind kind_ = StencilKind::D2Q9;
  int dim_ = 0;
  int q_ = 0;
  double cs2_ = 0.0;
  Rational cs2_exact_{};
  std::vector<Eigen::Vector3i> velocities_;
  Eigen::VectorXd weights_;
  std::vector<Rational> weights_exact_;
  std::vector<int> opposite_;
};

Stencil make_stencil(StencilKind kind);

/// Calls `fn(StencilTraits<K>{})` for the runtime kind, so that hot loops can be
/// compiled against constant tables.
template <typename Fn>
decltype(auto) dispatch_stencil(StencilKind kind, Fn&& fn) {
  switch (kind) {
    case StencilKind::D2Q9:
      return fn(StencilTraits<StencilKind::D2Q9>{});
    case StencilKind::D3Q19:
      return fn(StencilTraits<StencilKind::D3Q19>{});
    case StencilKind::D3Q7:
      return fn(StencilTraits<StencilKind::D3Q7>{});
  }
  throw ConfigError("unknown stencil kind");
}

}  // namespace lbtopo
