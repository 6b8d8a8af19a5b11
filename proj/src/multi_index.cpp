#include "treefmm/multi_index.hpp"

#include <stdexcept>

namespace treefmm {

namespace {

constexpr int kAllTerms = term_count(kMaxDegree + 1);

double fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct Tables {
  std::vector<MultiIndex> indices;
  std::vector<OrderTables::Step> steps;
  std::vector<double> inv_fact;
  std::vector<OrderTables> orders;  // orders[p], p = 1 .. kMaxOrder + 1
  std::vector<std::vector<int>> m2l;  // m2l[p], p = 1 .. kMaxOrder

  Tables() {
    indices.reserve(kAllTerms);
    for (int d = 0; d <= kMaxDegree; ++d)
      for (int mx = d; mx >= 0; --mx)
        for (int my = d - mx; my >= 0; --my) indices.push_back({{mx, my, d - mx - my}});

    steps.resize(indices.size());
    inv_fact.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto& n = indices[i].n;
      inv_fact[i] = 1.0 / (fact(n[0]) * fact(n[1]) * fact(n[2]));
      for (int d = 0; d < 3; ++d) {
        auto m = n;
        m[d] -= 1;
        steps[i].prev[d] = m[d] >= 0 ? multi_index_position(m[0], m[1], m[2]) : -1;
        m[d] -= 1;
        steps[i].prev2[d] = m[d] >= 0 ? multi_index_position(m[0], m[1], m[2]) : -1;
      }
    }

    orders.resize(kMaxOrder + 2);
    for (int p = 1; p <= kMaxOrder + 1; ++p) {
      auto& t = orders[p];
      t.order = p;
      t.terms = term_count(p);
      t.pair_offset.assign(t.terms + 1, 0);
      for (int a = 0; a < t.terms; ++a) {
        t.pair_offset[a] = static_cast<int>(t.pairs.size());
        const auto& na = indices[a].n;
        const int room = p - indices[a].degree();
        for (int b = 0; b < term_count(room); ++b) {
          const auto& nb = indices[b].n;
          OrderTables::Pair pr{};
          pr.a = a;
          pr.b = b;
          pr.sum = multi_index_position(na[0] + nb[0], na[1] + nb[1], na[2] + nb[2]);
          pr.binom = binomial(na[0] + nb[0], na[0]) * binomial(na[1] + nb[1], na[1]) *
                     binomial(na[2] + nb[2], na[2]);
          t.pairs.push_back(pr);
        }
      }
      t.pair_offset[t.terms] = static_cast<int>(t.pairs.size());
    }

    m2l.resize(kMaxOrder + 1);
    for (int p = 1; p <= kMaxOrder; ++p) {
      const int mterms = term_count(p);
      const int lterms = term_count(local_order(p));
      auto& sums = m2l[p];
      sums.reserve(static_cast<std::size_t>(lterms) * mterms);
      for (int a = 0; a < lterms; ++a)
        for (int b = 0; b < mterms; ++b) {
          const auto& na = indices[a].n;
          const auto& nb = indices[b].n;
          sums.push_back(multi_index_position(na[0] + nb[0], na[1] + nb[1], na[2] + nb[2]));
        }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

const std::vector<MultiIndex>& multi_indices() { return tables().indices; }

const OrderTables& order_tables(int p) {
  if (p < 1 || p > kMaxOrder + 1) throw std::invalid_argument("expansion order out of range");
  return tables().orders[p];
}

const std::vector<int>& m2l_sum_index(int p) {
  if (p < 1 || p > kMaxOrder) throw std::invalid_argument("expansion order out of range");
  return tables().m2l[p];
}

const OrderTables::Step& derivative_step(int idx) { return tables().steps[idx]; }

double factorial(const MultiIndex& m) { return fact(m.n[0]) * fact(m.n[1]) * fact(m.n[2]); }

double inverse_factorial(int idx) { return tables().inv_fact[idx]; }

}  // namespace treefmm
