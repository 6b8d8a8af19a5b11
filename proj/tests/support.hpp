#pragma once

#include <cmath>
#include <random>

#include "treefmm/geometry.hpp"
#include "treefmm/p2p.hpp"

namespace testing_support {

using treefmm::ParticleSet;
using treefmm::Vec3;

// Bodies uniformly inside a ball of `radius` around `center`.
inline ParticleSet cluster(std::size_t n, const Vec3& center, double radius, std::uint64_t seed,
                           bool signed_charges = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParticleSet ps;
  while (ps.size() < n) {
    const Vec3 d{u(rng), u(rng), u(rng)};
    if (treefmm::dot(d, d) > 1.0) continue;
    const double q = signed_charges ? u(rng) : 0.5 + 0.5 * std::abs(u(rng));
    const Vec3 x = center + radius * d;
    ps.push_back(x[0], x[1], x[2], q);
  }
  return ps;
}

// Plain double loop, independent of the library's P2P.
inline void brute_force(ParticleSet& ps) {
  ps.clear_accumulators();
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i == j) continue;
      const Vec3 d = ps.position(i) - ps.position(j);
      const double r2 = treefmm::dot(d, d);
      if (r2 == 0.0) continue;
      const double inv = 1.0 / std::sqrt(r2);
      ps.phi[i] += ps.q[j] * inv;
      const double s = ps.q[j] * inv * inv * inv;
      ps.fx[i] += s * d[0];
      ps.fy[i] += s * d[1];
      ps.fz[i] += s * d[2];
    }
}

// Potential of point charges at x, summed directly.
inline double potential_at(const ParticleSet& src, const Vec3& x) {
  double phi = 0.0;
  for (std::size_t j = 0; j < src.size(); ++j) phi += src.q[j] / treefmm::norm(x - src.position(j));
  return phi;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing_support
