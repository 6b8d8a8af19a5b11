#pragma once

#include <cstdint>
#include <vector>

#include "treefmm/geometry.hpp"

namespace treefmm {

/// Relative L2 errors: sqrt(sum |f - f_ref|^2 / sum |f_ref|^2), likewise for
/// the potential.
struct ErrorNorms {
  double force = 0.0;
  double potential = 0.0;
};

ErrorNorms relative_error(const ParticleSet& approx, const ParticleSet& reference);

/// Direct-sum potentials and forces for a seeded subset of targets against
/// all bodies of the set.
struct ReferenceSample {
  std::vector<std::size_t> index;  // ascending
  std::vector<double> phi, fx, fy, fz;
};

/// Every body when count >= ps.size(). Sums run in parallel over targets,
/// each in a fixed order.
ReferenceSample reference_sample(const ParticleSet& ps, std::size_t count, std::uint64_t seed);

ErrorNorms relative_error(const ParticleSet& approx, const ReferenceSample& reference);

}  // namespace treefmm
