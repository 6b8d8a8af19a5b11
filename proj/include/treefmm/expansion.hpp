#pragma once

#include <span>
#include <vector>

#include "treefmm/geometry.hpp"
#include "treefmm/multi_index.hpp"

namespace treefmm {

/// Cartesian Taylor coefficients for every multi-index of total degree
/// < order, stored in graded-lexicographic order (see multi_index_position).
///
/// A multipole holds moments M_m = sum_j q_j (x_j - c)^m / m!; its potential
/// at x is sum_m (-1)^|m| M_m D_m(x - c), where D_m is the m-th partial
/// derivative of 1/|r|. A local expansion is the polynomial
/// phi(x) = sum_n L_n (x - c)^n.
class Expansion {
 public:
  Expansion() = default;
  explicit Expansion(int order);

  int order() const { return order_; }
  std::size_t size() const { return coeffs_.size(); }

  double& operator[](std::size_t i) { return coeffs_[i]; }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& at(int mx, int my, int mz) { return coeffs_[multi_index_position(mx, my, mz)]; }
  double at(int mx, int my, int mz) const { return coeffs_[multi_index_position(mx, my, mz)]; }

  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }

  friend bool operator==(const Expansion&, const Expansion&) = default;

 private:
  int order_ = 0;
  std::vector<double> coeffs_;
};

/// Fills d[k] = D_k(r) = d^|k| (1/|r|) / dr^k for every |k| < max_order.
/// Computed by recurrence at call time; nothing is precomputed per geometry.
void laplace_derivatives(const Vec3& r, int max_order, std::span<double> d);

// Accumulating kernels over raw coefficient blocks. `p` is the multipole
// order and multipole spans hold term_count(p) coefficients. Local spans hold
// term_count(q) coefficients, where q is local_order(p) for locals produced
// by m2l. These are the entry points used by the tree passes and traversals.
namespace kernels {

void p2m(const BodySlice& bodies, const Vec3& center, int p, std::span<double> multipole);
/// shift = new center - old center.
void m2m(std::span<const double> child, const Vec3& shift, int p, std::span<double> parent);
/// Writes a local of order local_order(p). r = target center - source
/// center; throws on r == 0.
void m2l(std::span<const double> multipole, const Vec3& r, int p, std::span<double> local);
/// shift = new center - old center.
void l2l(std::span<const double> parent, const Vec3& shift, int q, std::span<double> child);
void l2p(std::span<const double> local, const Vec3& center, int q, const BodySlice& bodies);
/// Throws when a body coincides with the expansion center.
void m2p(std::span<const double> multipole, const Vec3& center, int p, const BodySlice& bodies);

}  // namespace kernels

Expansion p2m(const BodySlice& bodies, const Vec3& center, int p);
Expansion m2m(const Expansion& child, const Vec3& shift);
/// Result has order local_order(multipole.order()).
Expansion m2l(const Expansion& multipole, const Vec3& r);
Expansion l2l(const Expansion& parent, const Vec3& shift);
void l2p(const Expansion& local, const Vec3& center, const BodySlice& bodies);
void m2p(const Expansion& multipole, const Vec3& center, const BodySlice& bodies);

/// parent += translated child; throws std::invalid_argument on order mismatch.
void m2m_add(Expansion& parent, const Expansion& child, const Vec3& shift);
void l2l_add(Expansion& child, const Expansion& parent, const Vec3& shift);

/// Value of the local polynomial at a point (no gradient).
double evaluate_local(const Expansion& local, const Vec3& center, const Vec3& x);

}  // namespace treefmm
