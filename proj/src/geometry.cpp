#include "treefmm/geometry.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace treefmm {

void ParticleSet::resize(std::size_t n) {
  for (auto* a : {&x, &y, &z, &q, &phi, &fx, &fy, &fz}) a->resize(n, 0.0);
}

void ParticleSet::reserve(std::size_t n) {
  for (auto* a : {&x, &y, &z, &q, &phi, &fx, &fy, &fz}) a->reserve(n);
}

void ParticleSet::push_back(double px, double py, double pz, double charge) {
  x.push_back(px);
  y.push_back(py);
  z.push_back(pz);
  q.push_back(charge);
  phi.push_back(0.0);
  fx.push_back(0.0);
  fy.push_back(0.0);
  fz.push_back(0.0);
}

void ParticleSet::clear_accumulators() {
  for (auto* a : {&phi, &fx, &fy, &fz}) std::fill(a->begin(), a->end(), 0.0);
}

BodySlice ParticleSet::slice(std::size_t begin, std::size_t end) {
  const std::size_t n = end - begin;
  return BodySlice{
      {x.data() + begin, n},   {y.data() + begin, n},   {z.data() + begin, n},   {q.data() + begin, n},
      {phi.data() + begin, n}, {fx.data() + begin, n}, {fy.data() + begin, n}, {fz.data() + begin, n},
  };
}

bool Aabb::contains(const Vec3& p) const {
  for (std::size_t d = 0; d < 3; ++d)
    if (p[d] < min[d] || p[d] > max[d]) return false;
  return true;
}

double Aabb::farthest_corner_distance(const Vec3& p) const {
  double r2 = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const double a = std::max(std::abs(p[d] - min[d]), std::abs(p[d] - max[d]));
    r2 += a * a;
  }
  return std::sqrt(r2);
}

namespace {

template <class Coords>
Aabb bounds_of(const Coords& x, const Coords& y, const Coords& z) {
  if (x.empty()) throw std::invalid_argument("empty particle set");
  Aabb box{{x[0], y[0], z[0]}, {x[0], y[0], z[0]}};
  for (std::size_t i = 1; i < x.size(); ++i) {
    const Vec3 p{x[i], y[i], z[i]};
    for (std::size_t d = 0; d < 3; ++d) {
      box.min[d] = std::min(box.min[d], p[d]);
      box.max[d] = std::max(box.max[d], p[d]);
    }
  }
  return box;
}

// Spreads the low 21 bits of v so that bit b lands at bit 3b.
std::uint64_t spread_bits(std::uint64_t v) {
  v &= 0x1fffffull;
  v = (v | (v << 32)) & 0x1f00000000ffffull;
  v = (v | (v << 16)) & 0x1f0000ff0000ffull;
  v = (v | (v << 8)) & 0x100f00f00f00f00full;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ull;
  v = (v | (v << 2)) & 0x1249249249249249ull;
  return v;
}

std::uint32_t compact_bits(std::uint64_t v) {
  v &= 0x1249249249249249ull;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ull;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00full;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffull;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffull;
  v = (v ^ (v >> 32)) & 0x1fffffull;
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Aabb compute_bounds(const ParticleSet& ps) { return bounds_of(ps.x, ps.y, ps.z); }

Aabb compute_bounds(const BodySlice& bodies) { return bounds_of(bodies.x, bodies.y, bodies.z); }

MortonKey morton_encode(const GridIndex& index, int level) {
  for (auto c : index)
    if (c >= kGridSize) throw std::out_of_range("index overflow");
  if (level < 0 || level > kMaxLevel) throw std::invalid_argument("level out of range");
  for (auto c : index)
    if ((static_cast<std::uint64_t>(c) >> level) != 0) throw std::invalid_argument("index outside level grid");
  return {spread_bits(index[0]) | (spread_bits(index[1]) << 1) | (spread_bits(index[2]) << 2), level};
}

GridIndex morton_decode(const MortonKey& key) {
  return {compact_bits(key.key), compact_bits(key.key >> 1), compact_bits(key.key >> 2)};
}

std::optional<MortonKey> neighbor_key(const MortonKey& key, const std::array<int, 3>& delta) {
  const GridIndex idx = morton_decode(key);
  const std::int64_t extent = std::int64_t{1} << key.level;
  GridIndex out{};
  for (std::size_t d = 0; d < 3; ++d) {
    const std::int64_t c = static_cast<std::int64_t>(idx[d]) + delta[d];
    if (c < 0 || c >= extent) return std::nullopt;
    out[d] = static_cast<std::uint32_t>(c);
  }
  return morton_encode(out, key.level);
}

ParticleSet generate_distribution(Distribution kind, std::size_t n, std::uint64_t seed) {
  if (kind != Distribution::Cube) throw std::invalid_argument("unsupported distribution");
  std::mt19937_64 rng(seed);
  // 53 random mantissa bits; bit-exact across standard libraries.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  ParticleSet ps;
  ps.reserve(n);
  const double charge = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double px = uniform();
    const double py = uniform();
    const double pz = uniform();
    ps.push_back(px, py, pz, charge);
  }
  return ps;
}

}  // namespace treefmm
