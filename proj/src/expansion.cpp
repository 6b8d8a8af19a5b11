#include "treefmm/expansion.hpp"

#include <array>
#include <stdexcept>

namespace treefmm {

namespace {

constexpr int kScratch = term_count(kMaxOrder + 1);
using Scratch = std::array<double, kScratch>;
using DerivativeScratch = std::array<double, term_count(kMaxDegree + 1)>;

// pw[n] = y^n for all |n| < p.
void monomials(const Vec3& y, int p, double* pw) {
  pw[0] = 1.0;
  const int terms = term_count(p);
  for (int i = 1; i < terms; ++i) {
    const auto& st = derivative_step(i);
    const int d = st.prev[0] >= 0 ? 0 : (st.prev[1] >= 0 ? 1 : 2);
    pw[i] = pw[st.prev[d]] * y[d];
  }
}

// pw[n] = s^n / n! for all |n| < p.
void scaled_monomials(const Vec3& s, int p, double* pw) {
  monomials(s, p, pw);
  const int terms = term_count(p);
  for (int i = 1; i < terms; ++i) pw[i] *= inverse_factorial(i);
}

}  // namespace

Expansion::Expansion(int order) : order_(order) {
  if (order < 1 || order > kMaxOrder + 1) throw std::invalid_argument("expansion order out of range");
  coeffs_.assign(term_count(order), 0.0);
}

void laplace_derivatives(const Vec3& r, int max_order, std::span<double> d) {
  const double r2 = dot(r, r);
  const double inv_r2 = 1.0 / r2;
  d[0] = std::sqrt(inv_r2);
  const auto& idx = multi_indices();
  const int terms = term_count(max_order);
  for (int k = 1; k < terms; ++k) {
    const auto& n = idx[k].n;
    const auto& st = derivative_step(k);
    const int deg = idx[k].degree();
    double first = 0.0;
    double second = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (n[a] >= 1) first += n[a] * r[a] * d[st.prev[a]];
      if (n[a] >= 2) second += n[a] * (n[a] - 1) * d[st.prev2[a]];
    }
    d[k] = -((2 * deg - 1) * first + (deg - 1) * second) * inv_r2 / deg;
  }
}

namespace kernels {

void p2m(const BodySlice& bodies, const Vec3& center, int p, std::span<double> multipole) {
  const int terms = term_count(p);
  Scratch pw;
  Scratch acc{};
  for (std::size_t j = 0; j < bodies.size(); ++j) {
    monomials(bodies.position(j) - center, p, pw.data());
    const double q = bodies.q[j];
    for (int k = 0; k < terms; ++k) acc[k] += q * pw[k];
  }
  for (int k = 0; k < terms; ++k) multipole[k] += acc[k] * inverse_factorial(k);
}

void m2m(std::span<const double> child, const Vec3& shift, int p, std::span<double> parent) {
  // Moments about c + s: (d - s)^m / m! = sum_{a+b=m} d^a/a! (-s)^b/b!.
  Scratch pw;
  scaled_monomials(-shift, p, pw.data());
  for (const auto& pr : order_tables(p).pairs) parent[pr.sum] += child[pr.a] * pw[pr.b];
}

void m2l(std::span<const double> multipole, const Vec3& r, int p, std::span<double> local) {
  if (dot(r, r) == 0.0) throw std::invalid_argument("coincident expansion centers");
  // L_a = (1/a!) sum_b (-1)^|b| M_b D_{a+b}(r) for |a| <= p and every |b| < p.
  const int mterms = term_count(p);
  const int lterms = term_count(local_order(p));
  const int* sum = m2l_sum_index(p).data();
  DerivativeScratch d;
  Scratch signed_m;
  laplace_derivatives(r, 2 * p, d);
  const auto& idx = multi_indices();
  for (int b = 0; b < mterms; ++b) signed_m[b] = (idx[b].degree() % 2) ? -multipole[b] : multipole[b];
  for (int a = 0; a < lterms; ++a, sum += mterms) {
    double acc = 0.0;
    for (int b = 0; b < mterms; ++b) acc += signed_m[b] * d[sum[b]];
    local[a] += acc * inverse_factorial(a);
  }
}

void l2l(std::span<const double> parent, const Vec3& shift, int p, std::span<double> child) {
  // sum_n L_n (y + s)^n = sum_a y^a sum_b C(a+b, a) s^b L_{a+b}.
  Scratch pw;
  monomials(shift, p, pw.data());
  const auto& tab = order_tables(p);
  for (int a = 0; a < tab.terms; ++a) {
    double acc = 0.0;
    for (int k = tab.pair_offset[a]; k < tab.pair_offset[a + 1]; ++k) {
      const auto& pr = tab.pairs[k];
      acc += parent[pr.sum] * pr.binom * pw[pr.b];
    }
    child[a] += acc;
  }
}

void l2p(std::span<const double> local, const Vec3& center, int p, const BodySlice& bodies) {
  const int terms = term_count(p);
  const auto& idx = multi_indices();
  Scratch pw;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    monomials(bodies.position(i) - center, p, pw.data());
    double phi = local[0];
    Vec3 grad;
    for (int n = 1; n < terms; ++n) {
      phi += local[n] * pw[n];
      const auto& st = derivative_step(n);
      for (int d = 0; d < 3; ++d)
        if (st.prev[d] >= 0) grad[d] += local[n] * idx[n].n[d] * pw[st.prev[d]];
    }
    bodies.phi[i] += phi;
    bodies.fx[i] -= grad[0];
    bodies.fy[i] -= grad[1];
    bodies.fz[i] -= grad[2];
  }
}

void m2p(std::span<const double> multipole, const Vec3& center, int p, const BodySlice& bodies) {
  const int terms = term_count(p);
  const auto& idx = multi_indices();
  Scratch signed_m;
  for (int m = 0; m < terms; ++m) signed_m[m] = (idx[m].degree() % 2) ? -multipole[m] : multipole[m];
  Scratch d;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const Vec3 r = bodies.position(i) - center;
    if (dot(r, r) == 0.0) throw std::invalid_argument("body coincides with expansion center");
    laplace_derivatives(r, p + 1, d);
    double phi = 0.0;
    Vec3 grad;
    for (int m = 0; m < terms; ++m) {
      const auto& n = idx[m].n;
      phi += signed_m[m] * d[m];
      grad[0] += signed_m[m] * d[multi_index_position(n[0] + 1, n[1], n[2])];
      grad[1] += signed_m[m] * d[multi_index_position(n[0], n[1] + 1, n[2])];
      grad[2] += signed_m[m] * d[multi_index_position(n[0], n[1], n[2] + 1)];
    }
    bodies.phi[i] += phi;
    bodies.fx[i] -= grad[0];
    bodies.fy[i] -= grad[1];
    bodies.fz[i] -= grad[2];
  }
}

}  // namespace kernels

Expansion p2m(const BodySlice& bodies, const Vec3& center, int p) {
  Expansion out(p);
  kernels::p2m(bodies, center, p, out.coeffs());
  return out;
}

Expansion m2m(const Expansion& child, const Vec3& shift) {
  Expansion out(child.order());
  kernels::m2m(child.coeffs(), shift, child.order(), out.coeffs());
  return out;
}

Expansion m2l(const Expansion& multipole, const Vec3& r) {
  Expansion out(local_order(multipole.order()));
  kernels::m2l(multipole.coeffs(), r, multipole.order(), out.coeffs());
  return out;
}

Expansion l2l(const Expansion& parent, const Vec3& shift) {
  Expansion out(parent.order());
  kernels::l2l(parent.coeffs(), shift, parent.order(), out.coeffs());
  return out;
}

void l2p(const Expansion& local, const Vec3& center, const BodySlice& bodies) {
  kernels::l2p(local.coeffs(), center, local.order(), bodies);
}

void m2p(const Expansion& multipole, const Vec3& center, const BodySlice& bodies) {
  kernels::m2p(multipole.coeffs(), center, multipole.order(), bodies);
}

void m2m_add(Expansion& parent, const Expansion& child, const Vec3& shift) {
  if (parent.order() != child.order()) throw std::invalid_argument("expansion order mismatch");
  kernels::m2m(child.coeffs(), shift, child.order(), parent.coeffs());
}

void l2l_add(Expansion& child, const Expansion& parent, const Vec3& shift) {
  if (parent.order() != child.order()) throw std::invalid_argument("expansion order mismatch");
  kernels::l2l(parent.coeffs(), shift, parent.order(), child.coeffs());
}

double evaluate_local(const Expansion& local, const Vec3& center, const Vec3& x) {
  std::array<double, kScratch> pw;
  monomials(x - center, local.order(), pw.data());
  double phi = 0.0;
  for (std::size_t n = 0; n < local.size(); ++n) phi += local[n] * pw[n];
  return phi;
}

}  // namespace treefmm
