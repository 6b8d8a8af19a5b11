#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treefmm/geometry.hpp"

namespace treefmm {

enum class CellShape { Cubic, Rectangular };
enum class CenterMode { Geometric, CenterOfMass };

struct BuildOptions {
  std::size_t ncrit = 30;
  CellShape shape = CellShape::Cubic;
  CenterMode center = CenterMode::Geometric;
  /// Keep more than ncrit bodies in a depth-21 leaf instead of failing.
  bool allow_oversized_leaves = false;
};

inline constexpr std::uint32_t kNoCell = 0xffffffffu;

struct Cell {
  Aabb box;     // octant box; always a cube
  Aabb bounds;  // box for cubic trees, tight around the bodies for rectangular ones
  Vec3 center;  // center of expansion
  double bmax = 0.0;  // farthest body from center
  double rmax = 0.0;  // farthest corner of bounds from center
  MortonKey key;
  std::uint32_t parent = kNoCell;
  std::uint32_t first_child = 0;
  std::uint32_t child_count = 0;
  std::uint32_t body_begin = 0;
  std::uint32_t body_end = 0;

  bool is_leaf() const { return child_count == 0; }
  std::size_t body_count() const { return body_end - body_begin; }
  int level() const { return key.level; }
};

/// Adaptive octree over a private copy of the bodies, permuted into Morton
/// order. Cells are stored breadth first, so each level is a contiguous index
/// range and the children of a cell are contiguous. Expansion coefficients
/// live in two flat pools indexed by cell.
class Tree {
 public:
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(std::size_t i) const { return cells_[i]; }
  const Cell& root() const { return cells_.front(); }
  std::size_t size() const { return cells_.size(); }

  /// Number of levels present (root only = 1).
  int depth() const { return static_cast<int>(level_begin_.size()) - 1; }
  std::size_t level_begin(int level) const { return level_begin_[level]; }
  std::size_t level_end(int level) const { return level_begin_[level + 1]; }

  ParticleSet& bodies() { return bodies_; }
  const ParticleSet& bodies() const { return bodies_; }
  BodySlice bodies_of(const Cell& c) { return bodies_.slice(c.body_begin, c.body_end); }
  /// permutation()[i] is the original index of tree body i.
  const std::vector<std::uint32_t>& permutation() const { return permutation_; }

  const BuildOptions& options() const { return options_; }
  double root_side() const { return root_side_; }

  /// Multipole order of the pools (locals use local_order of it); 0 until
  /// allocate_expansions().
  int order() const { return order_; }
  void allocate_expansions(int p);
  void clear_locals();
  std::span<double> multipole(std::size_t cell);
  std::span<const double> multipole(std::size_t cell) const;
  std::span<double> local(std::size_t cell);
  std::span<const double> local(std::size_t cell) const;

  /// Copies the tree bodies' potentials and forces back to `out` in the
  /// original order. `out` must have the same size.
  void scatter_results(ParticleSet& out) const;

 private:
  friend Tree build_tree(const ParticleSet&, const BuildOptions&);

  std::vector<Cell> cells_;
  std::vector<std::size_t> level_begin_;
  ParticleSet bodies_;
  std::vector<std::uint32_t> permutation_;
  BuildOptions options_;
  Vec3 root_min_;
  double root_side_ = 0.0;
  int order_ = 0;
  std::size_t terms_ = 0;
  std::size_t local_terms_ = 0;
  std::vector<double> multipoles_;
  std::vector<double> locals_;
};

/// Splits octants of the root cube until each leaf holds at most ncrit
/// bodies. Throws std::invalid_argument on empty input or ncrit == 0 and
/// std::runtime_error ("max depth exceeded") when a depth-21 cell still holds
/// more than ncrit bodies and oversized leaves are not allowed.
Tree build_tree(const ParticleSet& ps, const BuildOptions& opts = {});

/// P2M at leaves, then M2M up the tree, children before parents.
void upward_pass(Tree& t, int p);

/// L2L from each parent into its children, top down, then L2P at the leaves
/// into the tree bodies' accumulators.
void downward_pass(Tree& t, int p);

struct TreeStats {
  int depth = 0;
  std::size_t cells = 0;
  std::size_t leaves = 0;
  std::size_t max_leaf_bodies = 0;
  std::vector<std::size_t> leaf_occupancy;  // [k] = number of leaves with k bodies
};

TreeStats tree_stats(const Tree& t);

}  // namespace treefmm
