#include "treefmm/p2p.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <stdexcept>

#if defined(__SSE2__)
#include <immintrin.h>
#endif

#include <omp.h>

namespace treefmm {

KernelStats& KernelStats::operator+=(const KernelStats& o) {
  p2p_calls += o.p2p_calls;
  p2p_pairs += o.p2p_pairs;
  p2p_flops += o.p2p_flops;
  coincident_pairs += o.coincident_pairs;
  m2l_calls += o.m2l_calls;
  m2p_calls += o.m2p_calls;
  p2p_seconds += o.p2p_seconds;
  m2l_seconds += o.m2l_seconds;
  m2p_seconds += o.m2p_seconds;
  return *this;
}

namespace {

constexpr std::size_t kLanes = 8;

// When `targets` is a sub-range of `sources`, the source index of target 0.
std::optional<std::size_t> self_offset(const BodySlice& targets, const BodySlice& sources) {
  const double* t = targets.x.data();
  const double* s = sources.x.data();
  if (targets.empty() || sources.empty()) return std::nullopt;
  if (t < s || t >= s + sources.size()) return std::nullopt;
  const auto off = static_cast<std::size_t>(t - s);
  if (off + targets.size() > sources.size()) throw std::invalid_argument("p2p: partially overlapping ranges");
  return off;
}

bool overlaps(const BodySlice& a, const BodySlice& b) {
  if (a.empty() || b.empty()) return false;
  const double* pa = a.x.data();
  const double* pb = b.x.data();
  return pa < pb + b.size() && pb < pa + a.size();
}

// Returns the number of r = 0 pairs skipped, the self pair included.
std::size_t p2p_scalar(const BodySlice& t, const BodySlice& s) {
  std::size_t zeros = 0;
  const std::size_t ns = s.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double xi = t.x[i], yi = t.y[i], zi = t.z[i];
    double pot = 0.0, ax = 0.0, ay = 0.0, az = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      const double dx = xi - s.x[j];
      const double dy = yi - s.y[j];
      const double dz = zi - s.z[j];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 == 0.0) {
        ++zeros;
        continue;
      }
      const double inv_r = 1.0 / std::sqrt(r2);
      const double q_inv_r = s.q[j] * inv_r;
      const double q_inv_r3 = q_inv_r * inv_r * inv_r;
      pot += q_inv_r;
      ax += dx * q_inv_r3;
      ay += dy * q_inv_r3;
      az += dz * q_inv_r3;
    }
    t.phi[i] += pot;
    t.fx[i] += ax;
    t.fy[i] += ay;
    t.fz[i] += az;
  }
  return zeros;
}

std::size_t p2p_batched(const BodySlice& t, const BodySlice& s) {
  std::size_t zeros = 0;
  const std::size_t nt = t.size();
  const std::size_t ns = s.size();
  const double* sx = s.x.data();
  const double* sy = s.y.data();
  const double* sz = s.z.data();
  const double* sq = s.q.data();
  std::size_t i0 = 0;
  for (; i0 + kLanes <= nt; i0 += kLanes) {
    alignas(64) double xi[kLanes], yi[kLanes], zi[kLanes];
    alignas(64) double pot[kLanes] = {}, ax[kLanes] = {}, ay[kLanes] = {}, az[kLanes] = {};
    for (std::size_t l = 0; l < kLanes; ++l) {
      xi[l] = t.x[i0 + l];
      yi[l] = t.y[i0 + l];
      zi[l] = t.z[i0 + l];
    }
    int batch_zeros = 0;
    for (std::size_t j = 0; j < ns; ++j) {
      const double xj = sx[j], yj = sy[j], zj = sz[j], qj = sq[j];
#pragma omp simd reduction(+ : batch_zeros)
      for (std::size_t l = 0; l < kLanes; ++l) {
        const double dx = xi[l] - xj;
        const double dy = yi[l] - yj;
        const double dz = zi[l] - zj;
        const double r2 = dx * dx + dy * dy + dz * dz;
        const bool zero = r2 == 0.0;
        const double inv_r = zero ? 0.0 : 1.0 / std::sqrt(zero ? 1.0 : r2);
        const double q_inv_r = qj * inv_r;
        const double q_inv_r3 = q_inv_r * inv_r * inv_r;
        pot[l] += q_inv_r;
        ax[l] += dx * q_inv_r3;
        ay[l] += dy * q_inv_r3;
        az[l] += dz * q_inv_r3;
        batch_zeros += zero ? 1 : 0;
      }
    }
    zeros += static_cast<std::size_t>(batch_zeros);
    for (std::size_t l = 0; l < kLanes; ++l) {
      t.phi[i0 + l] += pot[l];
      t.fx[i0 + l] += ax[l];
      t.fy[i0 + l] += ay[l];
      t.fz[i0 + l] += az[l];
    }
  }
  if (i0 < nt) {
    zeros += p2p_scalar(t.subslice(i0, nt - i0), s);
  }
  return zeros;
}

#if defined(__SSE2__)
std::size_t p2p_fast_rsqrt(const BodySlice& t, const BodySlice& s) {
  std::size_t zeros = 0;
  const std::size_t nt = t.size();
  const std::size_t ns = s.size();
  const __m128 half = _mm_set1_ps(0.5f);
  const __m128 three_halves = _mm_set1_ps(1.5f);
  const __m128 zero = _mm_setzero_ps();
  std::size_t i0 = 0;
  for (; i0 + 4 <= nt; i0 += 4) {
    const __m128 xi = _mm_setr_ps(float(t.x[i0]), float(t.x[i0 + 1]), float(t.x[i0 + 2]), float(t.x[i0 + 3]));
    const __m128 yi = _mm_setr_ps(float(t.y[i0]), float(t.y[i0 + 1]), float(t.y[i0 + 2]), float(t.y[i0 + 3]));
    const __m128 zi = _mm_setr_ps(float(t.z[i0]), float(t.z[i0 + 1]), float(t.z[i0 + 2]), float(t.z[i0 + 3]));
    __m128 pot = zero, ax = zero, ay = zero, az = zero;
    for (std::size_t j = 0; j < ns; ++j) {
      const __m128 dx = _mm_sub_ps(xi, _mm_set1_ps(float(s.x[j])));
      const __m128 dy = _mm_sub_ps(yi, _mm_set1_ps(float(s.y[j])));
      const __m128 dz = _mm_sub_ps(zi, _mm_set1_ps(float(s.z[j])));
      const __m128 r2 = _mm_add_ps(_mm_add_ps(_mm_mul_ps(dx, dx), _mm_mul_ps(dy, dy)), _mm_mul_ps(dz, dz));
      const __m128 nonzero = _mm_cmpgt_ps(r2, zero);
      __m128 inv_r = _mm_rsqrt_ps(r2);
      // One Newton step: y (3 - r2 y^2) / 2.
      inv_r = _mm_mul_ps(inv_r, _mm_sub_ps(three_halves, _mm_mul_ps(half, _mm_mul_ps(r2, _mm_mul_ps(inv_r, inv_r)))));
      inv_r = _mm_and_ps(nonzero, inv_r);
      const __m128 q_inv_r = _mm_mul_ps(_mm_set1_ps(float(s.q[j])), inv_r);
      const __m128 q_inv_r3 = _mm_mul_ps(q_inv_r, _mm_mul_ps(inv_r, inv_r));
      pot = _mm_add_ps(pot, q_inv_r);
      ax = _mm_add_ps(ax, _mm_mul_ps(dx, q_inv_r3));
      ay = _mm_add_ps(ay, _mm_mul_ps(dy, q_inv_r3));
      az = _mm_add_ps(az, _mm_mul_ps(dz, q_inv_r3));
      zeros += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(~_mm_movemask_ps(nonzero) & 0xf)));
    }
    alignas(16) float out[4][4];
    _mm_store_ps(out[0], pot);
    _mm_store_ps(out[1], ax);
    _mm_store_ps(out[2], ay);
    _mm_store_ps(out[3], az);
    for (std::size_t l = 0; l < 4; ++l) {
      t.phi[i0 + l] += out[0][l];
      t.fx[i0 + l] += out[1][l];
      t.fy[i0 + l] += out[2][l];
      t.fz[i0 + l] += out[3][l];
    }
  }
  if (i0 < nt) {
    zeros += p2p_scalar(t.subslice(i0, nt - i0), s);
  }
  return zeros;
}
#else
std::size_t p2p_fast_rsqrt(const BodySlice& t, const BodySlice& s) { return p2p_batched(t, s); }
#endif

// Each unordered pair once, applied to both sides. `same` selects the
// triangular loop over a single range.
std::size_t p2p_mutual(const BodySlice& t, const BodySlice& s, bool same) {
  std::size_t zeros = 0;
  double* sphi = s.phi.data();
  double* sfx = s.fx.data();
  double* sfy = s.fy.data();
  double* sfz = s.fz.data();
  const double* sx = s.x.data();
  const double* sy = s.y.data();
  const double* sz = s.z.data();
  const double* sq = s.q.data();
  const std::size_t ns = s.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double xi = t.x[i], yi = t.y[i], zi = t.z[i], qi = t.q[i];
    double pot = 0.0, ax = 0.0, ay = 0.0, az = 0.0;
    int row_zeros = 0;
    const std::size_t j0 = same ? i + 1 : 0;
#pragma omp simd reduction(+ : pot, ax, ay, az, row_zeros)
    for (std::size_t j = j0; j < ns; ++j) {
      const double dx = xi - sx[j];
      const double dy = yi - sy[j];
      const double dz = zi - sz[j];
      const double r2 = dx * dx + dy * dy + dz * dz;
      const bool zero = r2 == 0.0;
      const double inv_r = zero ? 0.0 : 1.0 / std::sqrt(zero ? 1.0 : r2);
      const double inv_r3 = inv_r * inv_r * inv_r;
      const double qj = sq[j];
      pot += qj * inv_r;
      ax += dx * qj * inv_r3;
      ay += dy * qj * inv_r3;
      az += dz * qj * inv_r3;
      sphi[j] += qi * inv_r;
      sfx[j] -= dx * qi * inv_r3;
      sfy[j] -= dy * qi * inv_r3;
      sfz[j] -= dz * qi * inv_r3;
      row_zeros += zero ? 1 : 0;
    }
    t.phi[i] += pot;
    t.fx[i] += ax;
    t.fy[i] += ay;
    t.fz[i] += az;
    zeros += static_cast<std::size_t>(row_zeros);
  }
  return zeros;
}

}  // namespace

void p2p(const BodySlice& targets, const BodySlice& sources, bool mutual, KernelStats& stats, P2PMode mode) {
  const std::size_t nt = targets.size();
  const std::size_t ns = sources.size();
  ++stats.p2p_calls;
  if (nt == 0 || ns == 0) return;

  if (mutual) {
    const bool same = targets.same_range(sources);
    if (!same && overlaps(targets, sources)) throw std::invalid_argument("p2p: mutual ranges must be disjoint or identical");
    const std::size_t zeros = p2p_mutual(targets, sources, same);
    const std::uint64_t total = same ? nt * (nt - 1) / 2 : nt * ns;
    stats.coincident_pairs += zeros;
    stats.add_pairs(total - zeros);
    return;
  }

  const auto self = self_offset(targets, sources);
  std::size_t zeros = 0;
  switch (mode) {
    case P2PMode::Scalar: zeros = p2p_scalar(targets, sources); break;
    case P2PMode::Batched: zeros = p2p_batched(targets, sources); break;
    case P2PMode::FastRsqrt: zeros = p2p_fast_rsqrt(targets, sources); break;
  }
  const std::uint64_t self_pairs = self ? nt : 0;
  stats.coincident_pairs += zeros - self_pairs;
  stats.add_pairs(nt * ns - zeros);
}

void direct(ParticleSet& targets, ParticleSet& sources, KernelStats* stats) {
  KernelStats local;
  p2p(targets.all(), sources.all(), false, local, P2PMode::Scalar);
  if (stats) *stats += local;
}

void direct_parallel(ParticleSet& targets, ParticleSet& sources, KernelStats* stats) {
  const std::size_t n = targets.size();
  constexpr std::size_t kChunk = 64;
  const auto chunks = static_cast<std::ptrdiff_t>((n + kChunk - 1) / kChunk);
  KernelStats total;
  BodySlice all_sources = sources.all();
#pragma omp parallel
  {
    KernelStats mine;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
      const std::size_t b = static_cast<std::size_t>(c) * kChunk;
      p2p(targets.slice(b, std::min(n, b + kChunk)), all_sources, false, mine, P2PMode::Scalar);
    }
#pragma omp critical
    total += mine;
  }
  // Chunked calls inflate the call counter; report a single logical call.
  total.p2p_calls = 1;
  if (stats) *stats += total;
}

}  // namespace treefmm
