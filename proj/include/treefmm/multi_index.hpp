#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace treefmm {

/// Highest supported multipole order.
inline constexpr int kMaxOrder = 12;

/// M2L pairs every multipole degree (< p) with every local degree (<= p), so
/// derivative tensors reach degree 2p - 1.
inline constexpr int kMaxDegree = 2 * kMaxOrder - 1;

/// Number of Cartesian multi-indices with total degree < p.
constexpr int term_count(int p) { return p * (p + 1) * (p + 2) / 6; }

/// Local expansions carry one degree more than the multipoles they are
/// built from, so L2P forces keep the order of M2P forces.
constexpr int local_order(int p) { return p + 1; }

struct MultiIndex {
  std::array<int, 3> n{0, 0, 0};
  int degree() const { return n[0] + n[1] + n[2]; }
};

/// Graded-lexicographic position: degree blocks in ascending order, and
/// within a block mx descending, then my descending.
constexpr int multi_index_position(int mx, int my, int mz) {
  const int d = mx + my + mz;
  const int j = d - mx;  // my + mz
  return term_count(d) + j * (j + 1) / 2 + mz;
}

/// Per-order lookup tables shared by all expansion kernels. Built once;
/// immutable afterwards so concurrent readers need no synchronization.
struct OrderTables {
  struct Pair {
    int a;           // outer index
    int b;           // inner index
    int sum;         // index of a + b
    double binom;    // C(a + b, a), componentwise product
  };
  struct Step {
    int prev[3];     // index of n - e_d, or -1
    int prev2[3];    // index of n - 2 e_d, or -1
  };

  int order = 0;
  int terms = 0;
  std::vector<Pair> pairs;       // all (a, b) with |a| + |b| < order, grouped by a
  std::vector<int> pair_offset;  // pairs for a live in [pair_offset[a], pair_offset[a + 1])
};

const std::vector<MultiIndex>& multi_indices();  // up to degree kMaxDegree
const OrderTables& order_tables(int p);           // 1 <= p <= kMaxOrder + 1
/// Index of a + b for every local index a < term_count(local_order(p)) and
/// multipole index b < term_count(p), row-major in a.
const std::vector<int>& m2l_sum_index(int p);  // 1 <= p <= kMaxOrder
const OrderTables::Step& derivative_step(int idx);
double factorial(const MultiIndex& m);
double inverse_factorial(int idx);

}  // namespace treefmm
