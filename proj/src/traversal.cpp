#include "treefmm/traversal.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "treefmm/expansion.hpp"

namespace treefmm {

void InteractionTrace::add(InteractionKind kind, std::uint32_t target, std::uint32_t source) {
  std::lock_guard lock(mu_);
  records_.push_back({kind, target, source});
}

std::vector<Interaction> InteractionTrace::records() const {
  std::vector<Interaction> out;
  {
    std::lock_guard lock(mu_);
    out = records_;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void InteractionTrace::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

void InteractionTrace::write_csv(std::ostream& out) const {
  static constexpr const char* kNames[] = {"P2P", "M2L", "M2P"};
  out << "type,targetCell,sourceCell\n";
  for (const Interaction& r : records())
    out << kNames[static_cast<int>(r.kind)] << ',' << r.target << ',' << r.source << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class ThreadScope {
 public:
  explicit ThreadScope(int threads) : saved_(omp_get_max_threads()), active_(threads > 0) {
    if (active_) omp_set_num_threads(threads);
  }
  ~ThreadScope() {
    if (active_) omp_set_num_threads(saved_);
  }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int saved_;
  bool active_;
};

struct alignas(64) PaddedStats {
  KernelStats s;
};

// Applies kernels between cells of a target and a source tree, counting into
// per-thread stats and the optional trace.
class KernelRunner {
 public:
  KernelRunner(Tree& targets, Tree& sources, const EvalConfig& cfg)
      : tt_(targets), st_(sources), cfg_(cfg), stats_(static_cast<std::size_t>(omp_get_max_threads())) {}

  void p2p(std::uint32_t a, std::uint32_t b, bool mutual) {
    const auto t0 = start();
    KernelStats& s = local();
    treefmm::p2p(tt_.bodies_of(tt_.cell(a)), st_.bodies_of(st_.cell(b)), mutual, s, cfg_.p2p_mode);
    if (cfg_.profile_kernels) s.p2p_seconds += seconds_since(t0);
    record(InteractionKind::P2P, a, b, mutual);
  }

  // Source multipole of b into target local of a. With `mutual` the reverse
  // direction is applied too (same tree only).
  void m2l(std::uint32_t a, std::uint32_t b, bool mutual) {
    const auto t0 = start();
    KernelStats& s = local();
    const Cell& ca = tt_.cell(a);
    const Cell& cb = st_.cell(b);
    kernels::m2l(st_.multipole(b), ca.center - cb.center, cfg_.p, tt_.local(a));
    ++s.m2l_calls;
    if (mutual) {
      kernels::m2l(tt_.multipole(a), cb.center - ca.center, cfg_.p, st_.local(b));
      ++s.m2l_calls;
    }
    if (cfg_.profile_kernels) s.m2l_seconds += seconds_since(t0);
    record(InteractionKind::M2L, a, b, mutual);
  }

  void m2p(std::uint32_t a, std::uint32_t b) {
    const auto t0 = start();
    KernelStats& s = local();
    const Cell& cb = st_.cell(b);
    kernels::m2p(st_.multipole(b), cb.center, cfg_.p, tt_.bodies_of(tt_.cell(a)));
    ++s.m2p_calls;
    if (cfg_.profile_kernels) s.m2p_seconds += seconds_since(t0);
    record(InteractionKind::M2P, a, b, false);
  }

  KernelStats merged() const {
    KernelStats total;
    for (const PaddedStats& p : stats_) total += p.s;
    return total;
  }

 private:
  KernelStats& local() { return stats_[static_cast<std::size_t>(omp_get_thread_num())].s; }

  Clock::time_point start() const { return cfg_.profile_kernels ? Clock::now() : Clock::time_point{}; }

  void record(InteractionKind kind, std::uint32_t a, std::uint32_t b, bool mutual) {
    if (!cfg_.trace) return;
    cfg_.trace->add(kind, a, b);
    if (mutual && a != b) cfg_.trace->add(kind, b, a);
  }

  Tree& tt_;
  Tree& st_;
  const EvalConfig& cfg_;
  std::vector<PaddedStats> stats_;
};

void check_ready(const Tree& t, const EvalConfig& cfg) {
  if (cfg.p < 1 || cfg.p > kMaxOrder) throw std::invalid_argument("expansion order out of range");
  if (t.order() != cfg.p)
    throw std::invalid_argument("tree expansions have order " + std::to_string(t.order()) + ", config asks for " +
                                std::to_string(cfg.p));
  if (cfg.task_grain == 0) throw std::invalid_argument("task_grain must be at least 1");
}

// An ancestor's expansion also holds the target's own bodies.
bool encloses(const Cell& outer, const Cell& inner) {
  return outer.body_begin <= inner.body_begin && inner.body_end <= outer.body_end;
}

std::vector<std::uint32_t> leaves_of(const Tree& t) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t.cell(i).is_leaf()) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

// ---------------------------------------------------------------- list FMM

struct GridBox {
  std::array<std::uint64_t, 3> lo;
  std::uint64_t size;
};

GridBox grid_box(const MortonKey& key) {
  const GridIndex g = morton_decode(key);
  const int shift = kMaxLevel - key.level;
  return {{std::uint64_t{g[0]} << shift, std::uint64_t{g[1]} << shift, std::uint64_t{g[2]} << shift},
          std::uint64_t{1} << shift};
}

// Closed boxes that touch or overlap.
bool adjacent(const MortonKey& a, const MortonKey& b) {
  const GridBox x = grid_box(a);
  const GridBox y = grid_box(b);
  for (std::size_t d = 0; d < 3; ++d)
    if (x.lo[d] > y.lo[d] + y.size || y.lo[d] > x.lo[d] + x.size) return false;
  return true;
}

class ListFmm {
 public:
  ListFmm(Tree& t, KernelRunner& run) : t_(t), run_(run), coarse_(t.size()) {
    by_level_.resize(static_cast<std::size_t>(t.depth()));
    for (int l = 0; l < t.depth(); ++l)
      for (std::size_t i = t.level_begin(l); i < t.level_end(l); ++i)
        by_level_[l].emplace(t.cell(i).key.key, static_cast<std::uint32_t>(i));
  }

  void run() {
    for (int l = 1; l < t_.depth(); ++l) {
      const auto begin = static_cast<std::ptrdiff_t>(t_.level_begin(l));
      const auto end = static_cast<std::ptrdiff_t>(t_.level_end(l));
#pragma omp parallel for schedule(dynamic, 8)
      for (std::ptrdiff_t ci = begin; ci < end; ++ci) far_field(static_cast<std::uint32_t>(ci));
    }
    const std::vector<std::uint32_t> leaves = leaves_of(t_);
    const auto nleaves = static_cast<std::ptrdiff_t>(leaves.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < nleaves; ++i) near_field(leaves[i]);
  }

 private:
  template <class F>
  void for_each_colleague(const Cell& c, F&& f) const {
    const auto& level = by_level_[c.level()];
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto k = neighbor_key(c.key, {dx, dy, dz});
          if (!k) continue;
          const auto it = level.find(k->key);
          if (it != level.end()) f(it->second);
        }
  }

  // M2L from the children of the parent's colleagues that are separated
  // from c. Coarser leaves adjacent to an ancestor are passed down until
  // they separate, then applied to the whole subtree by P2P.
  void far_field(std::uint32_t ci) {
    const Cell& c = t_.cell(ci);
    const Cell& parent = t_.cell(c.parent);
    auto& inherited = coarse_[ci];
    auto take_leaf = [&](std::uint32_t leaf) {
      if (adjacent(t_.cell(leaf).key, c.key))
        inherited.push_back(leaf);
      else
        run_.p2p(ci, leaf, false);
    };
    for (std::uint32_t leaf : coarse_[c.parent]) take_leaf(leaf);
    for_each_colleague(parent, [&](std::uint32_t qi) {
      const Cell& q = t_.cell(qi);
      if (q.is_leaf()) {
        take_leaf(qi);
        return;
      }
      for (std::uint32_t k = 0; k < q.child_count; ++k) {
        const std::uint32_t s = q.first_child + k;
        if (!adjacent(t_.cell(s).key, c.key)) run_.m2l(ci, s, false);
      }
    });
  }

  // P2P with inherited coarse leaves and same-level neighbour leaves; finer
  // cells below a neighbour are opened until they separate, then M2P.
  void near_field(std::uint32_t ti) {
    const Cell& target = t_.cell(ti);
    for (std::uint32_t leaf : coarse_[ti]) run_.p2p(ti, leaf, false);
    std::vector<std::uint32_t> stack;
    for_each_colleague(target, [&](std::uint32_t qi) {
      const Cell& q = t_.cell(qi);
      if (q.is_leaf()) {
        run_.p2p(ti, qi, false);
        return;
      }
      stack.assign(1, qi);
      while (!stack.empty()) {
        const Cell& open = t_.cell(stack.back());
        stack.pop_back();
        for (std::uint32_t k = 0; k < open.child_count; ++k) {
          const std::uint32_t s = open.first_child + k;
          const Cell& sc = t_.cell(s);
          if (!adjacent(sc.key, target.key))
            run_.m2p(ti, s);
          else if (sc.is_leaf())
            run_.p2p(ti, s, false);
          else
            stack.push_back(s);
        }
      }
    });
  }

  Tree& t_;
  KernelRunner& run_;
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> by_level_;
  std::vector<std::vector<std::uint32_t>> coarse_;
};

// --------------------------------------------------------------- dual tree

class DualTreeWalker {
 public:
  DualTreeWalker(Tree& targets, Tree& sources, const EvalConfig& cfg, KernelRunner& run)
      : tt_(targets), st_(sources), cfg_(cfg), run_(run), mutual_(cfg.mutual && &targets == &sources) {}

  void run() {
    // On a single tree the root pair is split symmetrically even one way, so
    // no pair ever holds a cell and its own ancestor.
    const PairKind kind = &tt_ == &st_ ? PairKind::Self : PairKind::Directed;
#pragma omp parallel
#pragma omp single
    {
      std::vector<Pair> stack;
      interact(0, 0, kind, stack);
      drain(stack);
    }
  }

 private:
  struct Pair {
    std::uint32_t a;
    std::uint32_t b;
    PairKind kind;
  };

  void interact(std::uint32_t a, std::uint32_t b, PairKind kind, std::vector<Pair>& stack) {
    const Cell& ca = tt_.cell(a);
    const Cell& cb = st_.cell(b);
    if (ca.is_leaf() && cb.is_leaf()) {
      run_.p2p(a, b, kind == PairKind::Mutual || (kind == PairKind::Self && mutual_));
      return;
    }
    if (kind != PairKind::Self) {
      bool ok = accept(cfg_.mac, ca, cb);
      if (kind == PairKind::Mutual) ok = ok && accept(cfg_.mac, cb, ca);
      if (ok) {
        run_.m2l(a, b, kind == PairKind::Mutual);
        return;
      }
    }
    stack.push_back({a, b, kind});
  }

  void drain(std::vector<Pair>& stack) {
    while (!stack.empty()) {
      const Pair pr = stack.back();
      stack.pop_back();
      split(pr, stack);
    }
  }

  void split(const Pair& pr, std::vector<Pair>& stack) {
    const Cell& ca = tt_.cell(pr.a);
    const Cell& cb = st_.cell(pr.b);
    const bool spawn = spawn_policy(ca, cb, pr.kind, cfg_) == SpawnDecision::SpawnTask;

    if (pr.kind == PairKind::Self) {
      const std::uint32_t first = ca.first_child;
      const std::uint32_t n = ca.child_count;
      if (spawn) {
        // Task i owns child i: its own self pair plus one-way pairs from the
        // siblings, so no two tasks write the same cell.
        for (std::uint32_t i = 0; i < n; ++i) {
#pragma omp task firstprivate(i)
          {
            std::vector<Pair> local;
            interact(first + i, first + i, PairKind::Self, local);
            for (std::uint32_t j = 0; j < n; ++j)
              if (j != i) interact(first + i, first + j, PairKind::Directed, local);
            drain(local);
          }
        }
#pragma omp taskwait
        return;
      }
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = mutual_ ? i : 0; j < n; ++j)
          interact(first + i, first + j, i == j ? PairKind::Self : (mutual_ ? PairKind::Mutual : PairKind::Directed),
                   stack);
      return;
    }

    if (splits_target(ca, cb)) {
      const std::uint32_t first = ca.first_child;
      const std::uint32_t n = ca.child_count;
      if (spawn) {
        for (std::uint32_t i = 0; i < n; ++i) {
#pragma omp task firstprivate(i)
          {
            std::vector<Pair> local;
            interact(first + i, pr.b, pr.kind, local);
            drain(local);
          }
        }
#pragma omp taskwait
        return;
      }
      for (std::uint32_t i = 0; i < n; ++i) interact(first + i, pr.b, pr.kind, stack);
      return;
    }
    for (std::uint32_t j = 0; j < cb.child_count; ++j) interact(pr.a, cb.first_child + j, pr.kind, stack);
  }

  Tree& tt_;
  Tree& st_;
  const EvalConfig& cfg_;
  KernelRunner& run_;
  bool mutual_;
};

void finish(EvalReport& report, const KernelRunner& run) {
  report.stats = run.merged();
  report.threads = omp_get_max_threads();
}

}  // namespace

bool splits_target(const Cell& target, const Cell& source) {
  if (source.is_leaf()) return true;
  if (target.is_leaf()) return false;
  return target.rmax >= source.rmax;
}

SpawnDecision spawn_policy(const Cell& target, const Cell& source, PairKind kind, const EvalConfig& cfg) {
  if (target.is_leaf() && source.is_leaf()) return SpawnDecision::Inline;
  if (kind == PairKind::Mutual) return SpawnDecision::Inline;
  if (kind == PairKind::Directed && !splits_target(target, source)) return SpawnDecision::Inline;
  return target.body_count() >= cfg.task_grain ? SpawnDecision::SpawnTask : SpawnDecision::Inline;
}

EvalReport evaluate_treecode(Tree& t, const EvalConfig& cfg) {
  check_ready(t, cfg);
  ThreadScope scope(cfg.threads);
  KernelRunner run(t, t, cfg);
  EvalReport report;

  const auto t0 = Clock::now();
  t.bodies().clear_accumulators();
  const std::vector<std::uint32_t> leaves = leaves_of(t);
  const auto nleaves = static_cast<std::ptrdiff_t>(leaves.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> stack;
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < nleaves; ++i) {
      const std::uint32_t ti = leaves[i];
      const Cell& target = t.cell(ti);
      if (t.root().is_leaf()) {
        run.p2p(ti, 0, false);
        continue;
      }
      stack.assign(1, 0);
      while (!stack.empty()) {
        const Cell& open = t.cell(stack.back());
        stack.pop_back();
        for (std::uint32_t k = 0; k < open.child_count; ++k) {
          const std::uint32_t s = open.first_child + k;
          const Cell& sc = t.cell(s);
          if (sc.is_leaf())
            run.p2p(ti, s, false);
          else if (!encloses(sc, target) && accept(cfg.mac, target, sc))
            run.m2p(ti, s);
          else
            stack.push_back(s);
        }
      }
    }
  }
  report.traversal_seconds = seconds_since(t0);
  finish(report, run);
  return report;
}

EvalReport evaluate_list_fmm(Tree& t, const EvalConfig& cfg) {
  if (t.options().shape != CellShape::Cubic) throw std::invalid_argument("ListFmm requires cubic cells");
  check_ready(t, cfg);
  ThreadScope scope(cfg.threads);
  KernelRunner run(t, t, cfg);
  EvalReport report;

  auto t0 = Clock::now();
  t.bodies().clear_accumulators();
  t.clear_locals();
  ListFmm(t, run).run();
  report.traversal_seconds = seconds_since(t0);

  t0 = Clock::now();
  downward_pass(t, cfg.p);
  report.downward_seconds = seconds_since(t0);
  finish(report, run);
  return report;
}

EvalReport evaluate_dual_tree(Tree& target, Tree& source, const EvalConfig& cfg) {
  check_ready(target, cfg);
  check_ready(source, cfg);
  ThreadScope scope(cfg.threads);
  KernelRunner run(target, source, cfg);
  EvalReport report;

  auto t0 = Clock::now();
  target.bodies().clear_accumulators();
  target.clear_locals();
  DualTreeWalker(target, source, cfg, run).run();
  report.traversal_seconds = seconds_since(t0);

  t0 = Clock::now();
  downward_pass(target, cfg.p);
  report.downward_seconds = seconds_since(t0);
  finish(report, run);
  return report;
}

EvalReport evaluate(Tree& t, const EvalConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::Treecode: return evaluate_treecode(t, cfg);
    case Strategy::ListFmm: return evaluate_list_fmm(t, cfg);
    case Strategy::DualTree: return evaluate_dual_tree(t, t, cfg);
  }
  throw std::invalid_argument("unknown strategy");
}

EvalReport run_evaluation(ParticleSet& ps, const BuildOptions& build, const EvalConfig& cfg, TreeStats* tree_shape) {
  if (cfg.strategy == Strategy::ListFmm && build.shape != CellShape::Cubic)
    throw std::invalid_argument("ListFmm requires cubic cells");
  ThreadScope scope(cfg.threads);
  const auto start = Clock::now();

  auto t0 = Clock::now();
  Tree t = build_tree(ps, build);
  const double build_s = seconds_since(t0);

  t0 = Clock::now();
  upward_pass(t, cfg.p);
  const double upward_s = seconds_since(t0);

  EvalReport report = evaluate(t, cfg);
  t.scatter_results(ps);
  report.build_seconds = build_s;
  report.upward_seconds = upward_s;
  report.total_seconds = seconds_since(start);
  if (tree_shape) *tree_shape = tree_stats(t);
  return report;
}

}  // namespace treefmm
