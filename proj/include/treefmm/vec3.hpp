#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace treefmm {

/// Small fixed 3-vector used for positions, offsets and forces.
struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : v{x, y, z} {}

  constexpr double& operator[](std::size_t d) { return v[d]; }
  constexpr double operator[](std::size_t d) const { return v[d]; }

  constexpr double x() const { return v[0]; }
  constexpr double y() const { return v[1]; }
  constexpr double z() const { return v[2]; }

  constexpr Vec3& operator+=(const Vec3& o) {
    for (std::size_t d = 0; d < 3; ++d) v[d] += o.v[d];
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    for (std::size_t d = 0; d < 3; ++d) v[d] -= o.v[d];
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    for (auto& c : v) c *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator-(Vec3 a) { return a *= -1.0; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace treefmm
