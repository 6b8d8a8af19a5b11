#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "treefmm/vec3.hpp"

namespace treefmm {

/// Mutable view over a contiguous index range of a ParticleSet. Every array
/// spans the same range, so lane i of each span refers to the same body.
struct BodySlice {
  std::span<double> x, y, z, q;
  std::span<double> phi, fx, fy, fz;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }

  BodySlice subslice(std::size_t offset, std::size_t count) const {
    return {x.subspan(offset, count),   y.subspan(offset, count),  z.subspan(offset, count),
            q.subspan(offset, count),   phi.subspan(offset, count), fx.subspan(offset, count),
            fy.subspan(offset, count),  fz.subspan(offset, count)};
  }

  /// True when both slices cover the same storage range.
  bool same_range(const BodySlice& o) const {
    return x.data() == o.x.data() && x.size() == o.x.size();
  }
};

/// Bodies in structure-of-arrays layout: one contiguous array per coordinate,
/// charge and accumulator.
class ParticleSet {
 public:
  ParticleSet() = default;
  explicit ParticleSet(std::size_t n) { resize(n); }

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }

  void resize(std::size_t n);
  void reserve(std::size_t n);
  void push_back(double px, double py, double pz, double charge);
  void clear_accumulators();

  Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }
  Vec3 force(std::size_t i) const { return {fx[i], fy[i], fz[i]}; }

  BodySlice slice(std::size_t begin, std::size_t end);
  BodySlice all() { return slice(0, size()); }

  std::vector<double> x, y, z, q;
  std::vector<double> phi, fx, fy, fz;
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const;
  /// Largest distance from `p` to any of the eight corners.
  double farthest_corner_distance(const Vec3& p) const;
};

/// Tight axis-aligned box around all bodies. Throws std::invalid_argument
/// ("empty particle set") when there are none.
Aabb compute_bounds(const ParticleSet& ps);
Aabb compute_bounds(const BodySlice& bodies);

inline constexpr int kMaxLevel = 21;
inline constexpr std::uint32_t kGridSize = 1u << kMaxLevel;

using GridIndex = std::array<std::uint32_t, 3>;

/// Bit-interleaved cell index. Bit 3b+d of `key` holds bit b of the index
/// along axis d (x least significant). Parent is key >> 3, children are
/// (key << 3) | octant.
struct MortonKey {
  std::uint64_t key = 0;
  int level = 0;

  MortonKey parent() const { return {key >> 3, level - 1}; }
  MortonKey child(unsigned octant) const { return {(key << 3) | octant, level + 1}; }
  unsigned octant() const { return static_cast<unsigned>(key & 7u); }

  friend bool operator==(const MortonKey&, const MortonKey&) = default;
  friend auto operator<=>(const MortonKey&, const MortonKey&) = default;
};

/// Interleaves a 3-D index. Throws std::out_of_range ("index overflow")
/// for components >= 2^21 and std::invalid_argument for a level outside
/// [0, 21] or components outside the level's grid.
MortonKey morton_encode(const GridIndex& index, int level = kMaxLevel);
GridIndex morton_decode(const MortonKey& key);

/// Offsets the cell by `delta` (components in {-1, 0, 1}); empty when the
/// result leaves the [0, 2^level)^3 grid.
std::optional<MortonKey> neighbor_key(const MortonKey& key, const std::array<int, 3>& delta);

enum class Distribution { Cube };

/// Uniform random bodies in [0,1]^3 with charge 1/n each. Deterministic for a
/// given seed.
ParticleSet generate_distribution(Distribution kind, std::size_t n, std::uint64_t seed);

}  // namespace treefmm

template <>
struct std::hash<treefmm::MortonKey> {
  std::size_t operator()(const treefmm::MortonKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.key * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(k.level));
  }
};
