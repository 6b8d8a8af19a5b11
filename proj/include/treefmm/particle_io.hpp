#pragma once

#include <iosfwd>
#include <string>

#include "treefmm/geometry.hpp"

namespace treefmm {

// CSV with header `x,y,z,q`, one body per row. Accumulators are not stored.
ParticleSet read_particles_csv(std::istream& in);
ParticleSet load_particles_csv(const std::string& path);
void write_particles_csv(std::ostream& out, const ParticleSet& ps);
void save_particles_csv(const std::string& path, const ParticleSet& ps);

}  // namespace treefmm
