#include "treefmm/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "treefmm/expansion.hpp"

namespace treefmm {

void Tree::allocate_expansions(int p) {
  if (p < 1 || p > kMaxOrder) throw std::invalid_argument("expansion order out of range");
  order_ = p;
  terms_ = static_cast<std::size_t>(term_count(p));
  local_terms_ = static_cast<std::size_t>(term_count(local_order(p)));
  multipoles_.assign(cells_.size() * terms_, 0.0);
  locals_.assign(cells_.size() * local_terms_, 0.0);
}

void Tree::clear_locals() { std::fill(locals_.begin(), locals_.end(), 0.0); }

std::span<double> Tree::multipole(std::size_t cell) { return {multipoles_.data() + cell * terms_, terms_}; }
std::span<const double> Tree::multipole(std::size_t cell) const { return {multipoles_.data() + cell * terms_, terms_}; }
std::span<double> Tree::local(std::size_t cell) { return {locals_.data() + cell * local_terms_, local_terms_}; }
std::span<const double> Tree::local(std::size_t cell) const {
  return {locals_.data() + cell * local_terms_, local_terms_};
}

void Tree::scatter_results(ParticleSet& out) const {
  if (out.size() != bodies_.size()) throw std::invalid_argument("scatter_results: size mismatch");
  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    const std::size_t o = permutation_[i];
    out.phi[o] = bodies_.phi[i];
    out.fx[o] = bodies_.fx[i];
    out.fy[o] = bodies_.fy[i];
    out.fz[o] = bodies_.fz[i];
  }
}

namespace {

std::uint32_t quantize(double x, double lo, double scale) {
  const double g = (x - lo) * scale;
  if (!(g > 0.0)) return 0;
  if (g >= static_cast<double>(kGridSize - 1)) return kGridSize - 1;
  return static_cast<std::uint32_t>(g);
}

void finish_geometry(Cell& c, const ParticleSet& bodies, const BuildOptions& opts) {
  const std::size_t b = c.body_begin;
  const std::size_t e = c.body_end;
  if (opts.shape == CellShape::Rectangular) {
    Aabb tight{bodies.position(b), bodies.position(b)};
    for (std::size_t i = b + 1; i < e; ++i)
      for (std::size_t d = 0; d < 3; ++d) {
        const double v = bodies.position(i)[d];
        tight.min[d] = std::min(tight.min[d], v);
        tight.max[d] = std::max(tight.max[d], v);
      }
    c.bounds = tight;
  } else {
    c.bounds = c.box;
  }

  c.center = c.bounds.center();
  if (opts.center == CenterMode::CenterOfMass) {
    // Weighted by |q| so mixed-sign charges still give a point inside the hull.
    double w = 0.0;
    Vec3 acc;
    for (std::size_t i = b; i < e; ++i) {
      const double qi = std::abs(bodies.q[i]);
      w += qi;
      acc += qi * bodies.position(i);
    }
    if (w > 0.0) c.center = acc * (1.0 / w);
  }

  double r2max = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    const Vec3 d = bodies.position(i) - c.center;
    r2max = std::max(r2max, dot(d, d));
  }
  c.bmax = std::sqrt(r2max);
  c.rmax = c.bounds.farthest_corner_distance(c.center);
}

}  // namespace

Tree build_tree(const ParticleSet& ps, const BuildOptions& opts) {
  if (ps.empty()) throw std::invalid_argument("empty particle set");
  if (opts.ncrit == 0) throw std::invalid_argument("ncrit must be at least 1");
  if (ps.size() >= kNoCell) throw std::invalid_argument("too many bodies");

  Tree t;
  t.options_ = opts;
  const std::size_t n = ps.size();

  const Aabb bounds = compute_bounds(ps);
  const Vec3 ext = bounds.extent();
  double side = std::max({ext[0], ext[1], ext[2]});
  if (side == 0.0) side = 1.0;
  t.root_min_ = bounds.center() - Vec3{0.5 * side, 0.5 * side, 0.5 * side};
  t.root_side_ = side;

  const double scale = static_cast<double>(kGridSize) / side;
  std::vector<std::uint64_t> keys(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const GridIndex g{quantize(ps.x[i], t.root_min_[0], scale), quantize(ps.y[i], t.root_min_[1], scale),
                      quantize(ps.z[i], t.root_min_[2], scale)};
    keys[i] = morton_encode(g).key;
  }

  t.permutation_.resize(n);
  std::iota(t.permutation_.begin(), t.permutation_.end(), 0u);
  std::sort(t.permutation_.begin(), t.permutation_.end(), [&keys](std::uint32_t a, std::uint32_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
  });

  t.bodies_.resize(n);
  std::vector<std::uint64_t> sorted_keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t o = t.permutation_[i];
    t.bodies_.x[i] = ps.x[o];
    t.bodies_.y[i] = ps.y[o];
    t.bodies_.z[i] = ps.z[o];
    t.bodies_.q[i] = ps.q[o];
    sorted_keys[i] = keys[o];
  }

  Cell root;
  root.box = {t.root_min_, t.root_min_ + Vec3{side, side, side}};
  root.key = {0, 0};
  root.body_begin = 0;
  root.body_end = static_cast<std::uint32_t>(n);
  t.cells_.push_back(root);
  t.level_begin_ = {0};

  for (std::size_t ci = 0; ci < t.cells_.size(); ++ci) {
    const int level = t.cells_[ci].level();
    if (static_cast<std::size_t>(level) == t.level_begin_.size()) t.level_begin_.push_back(ci);

    const Cell cell = t.cells_[ci];
    if (cell.body_count() <= opts.ncrit) continue;
    if (level == kMaxLevel) {
      if (opts.allow_oversized_leaves) continue;
      throw std::runtime_error("max depth exceeded");
    }

    const int digit_shift = 3 * (kMaxLevel - level - 1);
    const double half = 0.5 * (cell.box.max[0] - cell.box.min[0]);
    const auto first = sorted_keys.begin() + cell.body_begin;
    const auto last = sorted_keys.begin() + cell.body_end;
    auto lo = first;
    const auto first_child = static_cast<std::uint32_t>(t.cells_.size());
    std::uint32_t count = 0;
    for (unsigned oct = 0; oct < 8 && lo != last; ++oct) {
      const auto hi = std::partition_point(lo, last, [&](std::uint64_t k) { return ((k >> digit_shift) & 7u) <= oct; });
      if (hi == lo) continue;
      Cell child;
      child.key = cell.key.child(oct);
      child.parent = static_cast<std::uint32_t>(ci);
      child.body_begin = static_cast<std::uint32_t>(lo - sorted_keys.begin());
      child.body_end = static_cast<std::uint32_t>(hi - sorted_keys.begin());
      const Vec3 offset{(oct & 1u) ? half : 0.0, (oct & 2u) ? half : 0.0, (oct & 4u) ? half : 0.0};
      child.box.min = cell.box.min + offset;
      child.box.max = child.box.min + Vec3{half, half, half};
      t.cells_.push_back(child);
      ++count;
      lo = hi;
    }
    t.cells_[ci].first_child = first_child;
    t.cells_[ci].child_count = count;
  }
  t.level_begin_.push_back(t.cells_.size());

#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(t.cells_.size()); ++ci)
    finish_geometry(t.cells_[ci], t.bodies_, opts);

  return t;
}

void upward_pass(Tree& t, int p) {
  t.allocate_expansions(p);
  for (int level = t.depth() - 1; level >= 0; --level) {
    const auto begin = static_cast<std::ptrdiff_t>(t.level_begin(level));
    const auto end = static_cast<std::ptrdiff_t>(t.level_end(level));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t ci = begin; ci < end; ++ci) {
      const Cell& c = t.cell(ci);
      if (c.is_leaf()) {
        kernels::p2m(t.bodies_of(c), c.center, p, t.multipole(ci));
        continue;
      }
      for (std::uint32_t k = 0; k < c.child_count; ++k) {
        const std::size_t child = c.first_child + k;
        kernels::m2m(t.multipole(child), c.center - t.cell(child).center, p, t.multipole(ci));
      }
    }
  }
}

void downward_pass(Tree& t, int p) {
  if (p != t.order()) throw std::invalid_argument("downward_pass: order differs from the tree's expansions");
  const int q = local_order(p);
  for (int level = 0; level < t.depth(); ++level) {
    const auto begin = static_cast<std::ptrdiff_t>(t.level_begin(level));
    const auto end = static_cast<std::ptrdiff_t>(t.level_end(level));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t ci = begin; ci < end; ++ci) {
      const Cell& c = t.cell(ci);
      if (c.parent != kNoCell)
        kernels::l2l(t.local(c.parent), c.center - t.cell(c.parent).center, q, t.local(ci));
      if (c.is_leaf()) kernels::l2p(t.local(ci), c.center, q, t.bodies_of(c));
    }
  }
}

TreeStats tree_stats(const Tree& t) {
  TreeStats s;
  s.depth = t.depth();
  s.cells = t.size();
  for (const Cell& c : t.cells()) {
    if (!c.is_leaf()) continue;
    ++s.leaves;
    const std::size_t k = c.body_count();
    s.max_leaf_bodies = std::max(s.max_leaf_bodies, k);
    if (s.leaf_occupancy.size() <= k) s.leaf_occupancy.resize(k + 1, 0);
    ++s.leaf_occupancy[k];
  }
  return s;
}

}  // namespace treefmm
