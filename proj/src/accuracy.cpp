#include "treefmm/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "treefmm/p2p.hpp"

namespace treefmm {

namespace {

struct Sums {
  double df = 0.0, f = 0.0, dp = 0.0, p = 0.0;

  void add(const ParticleSet& a, std::size_t i, double phi, double fx, double fy, double fz) {
    const double ex = a.fx[i] - fx, ey = a.fy[i] - fy, ez = a.fz[i] - fz, ep = a.phi[i] - phi;
    df += ex * ex + ey * ey + ez * ez;
    f += fx * fx + fy * fy + fz * fz;
    dp += ep * ep;
    p += phi * phi;
  }

  ErrorNorms norms() const {
    auto ratio = [](double num, double den) { return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num); };
    return {ratio(df, f), ratio(dp, p)};
  }
};

}  // namespace

ErrorNorms relative_error(const ParticleSet& approx, const ParticleSet& reference) {
  if (approx.size() != reference.size()) throw std::invalid_argument("relative_error: size mismatch");
  Sums s;
  for (std::size_t i = 0; i < approx.size(); ++i)
    s.add(approx, i, reference.phi[i], reference.fx[i], reference.fy[i], reference.fz[i]);
  return s.norms();
}

ReferenceSample reference_sample(const ParticleSet& ps, std::size_t count, std::uint64_t seed) {
  ReferenceSample r;
  const std::size_t n = ps.size();
  r.index.resize(n);
  std::iota(r.index.begin(), r.index.end(), std::size_t{0});
  if (count < n) {
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates keeps the draw independent of the library's shuffle.
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
      std::swap(r.index[i], r.index[j]);
    }
    r.index.resize(count);
    std::sort(r.index.begin(), r.index.end());
  }

  const std::size_t m = r.index.size();
  r.phi.assign(m, 0.0);
  r.fx.assign(m, 0.0);
  r.fy.assign(m, 0.0);
  r.fz.assign(m, 0.0);
  ParticleSet work = ps;
  work.clear_accumulators();
  const BodySlice all = work.all();
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(m); ++k) {
    const std::size_t i = r.index[k];
    KernelStats unused;
    p2p(work.slice(i, i + 1), all, false, unused, P2PMode::Scalar);
    r.phi[k] = work.phi[i];
    r.fx[k] = work.fx[i];
    r.fy[k] = work.fy[i];
    r.fz[k] = work.fz[i];
  }
  return r;
}

ErrorNorms relative_error(const ParticleSet& approx, const ReferenceSample& reference) {
  Sums s;
  for (std::size_t k = 0; k < reference.index.size(); ++k) {
    const std::size_t i = reference.index[k];
    if (i >= approx.size()) throw std::out_of_range("relative_error: sample index out of range");
    s.add(approx, i, reference.phi[k], reference.fx[k], reference.fy[k], reference.fz[k]);
  }
  return s.norms();
}

}  // namespace treefmm
