#pragma once

#include <cstdint>

#include "treefmm/geometry.hpp"

namespace treefmm {

/// Floating-point operations charged per evaluated body pair (potential and
/// force of the Laplace kernel).
inline constexpr std::uint64_t kFlopsPerPair = 20;

struct KernelStats {
  std::uint64_t p2p_calls = 0;
  std::uint64_t p2p_pairs = 0;
  std::uint64_t p2p_flops = 0;
  std::uint64_t coincident_pairs = 0;  // distinct bodies at r = 0, skipped
  std::uint64_t m2l_calls = 0;
  std::uint64_t m2p_calls = 0;
  double p2p_seconds = 0.0;
  double m2l_seconds = 0.0;
  double m2p_seconds = 0.0;

  void add_pairs(std::uint64_t n) {
    p2p_pairs += n;
    p2p_flops += kFlopsPerPair * n;
  }
  KernelStats& operator+=(const KernelStats& o);
};

enum class P2PMode {
  Scalar,     // one target at a time; the correctness reference
  Batched,    // fixed-width target batches over contiguous lanes
  FastRsqrt,  // single precision with approximate reciprocal square root
};

/// phi_i += sum_j q_j / r_ij and f_i += sum_j q_j (x_i - x_j) / r_ij^3, i.e.
/// f = -grad phi. Pairs at r = 0 are skipped: the self pair silently, distinct
/// coincident bodies counted in stats.coincident_pairs.
///
/// With `mutual`, every pair is evaluated once and applied to both sides;
/// targets and sources must then be disjoint or the same range. Mutual
/// interactions use the double-precision lane loop regardless of `mode`.
void p2p(const BodySlice& targets, const BodySlice& sources, bool mutual, KernelStats& stats,
         P2PMode mode = P2PMode::Batched);

/// O(N^2) reference sum using the scalar path, fixed summation order.
/// `targets` and `sources` may be the same object.
void direct(ParticleSet& targets, ParticleSet& sources, KernelStats* stats = nullptr);

/// Same sums as direct() with the target loop split across OpenMP threads.
/// Per-target summation order is unchanged, so results are bitwise equal.
void direct_parallel(ParticleSet& targets, ParticleSet& sources, KernelStats* stats = nullptr);

}  // namespace treefmm
