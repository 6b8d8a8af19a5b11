#include <benchmark/benchmark.h>

#include "treefmm/expansion.hpp"
#include "treefmm/traversal.hpp"

using namespace treefmm;

namespace {

void p2p_mode(benchmark::State& state, P2PMode mode) {
  ParticleSet ps = generate_distribution(Distribution::Cube, static_cast<std::size_t>(state.range(0)), 1);
  KernelStats st;
  for (auto _ : state) {
    ps.clear_accumulators();
    p2p(ps.all(), ps.all(), false, st, mode);
    benchmark::DoNotOptimize(ps.phi.data());
  }
  state.counters["flop/s"] = benchmark::Counter(static_cast<double>(st.p2p_flops), benchmark::Counter::kIsRate);
}

void BM_P2PScalar(benchmark::State& s) { p2p_mode(s, P2PMode::Scalar); }
void BM_P2PBatched(benchmark::State& s) { p2p_mode(s, P2PMode::Batched); }
void BM_P2PRsqrt(benchmark::State& s) { p2p_mode(s, P2PMode::FastRsqrt); }
BENCHMARK(BM_P2PScalar)->Arg(32)->Arg(1024);
BENCHMARK(BM_P2PBatched)->Arg(32)->Arg(1024);
BENCHMARK(BM_P2PRsqrt)->Arg(32)->Arg(1024);

// Serial reference against its OpenMP twin.
void BM_Direct(benchmark::State& state) {
  ParticleSet ps = generate_distribution(Distribution::Cube, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) direct(ps, ps);
}
void BM_DirectParallel(benchmark::State& state) {
  ParticleSet ps = generate_distribution(Distribution::Cube, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) direct_parallel(ps, ps);
}
BENCHMARK(BM_Direct)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DirectParallel)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_M2L(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Expansion m(p);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1.0 / static_cast<double>(i + 1);
  Expansion l(local_order(p));
  for (auto _ : state) {
    kernels::m2l(m.coeffs(), {1.0, 0.5, 0.25}, p, l.coeffs());
    benchmark::DoNotOptimize(l.coeffs().data());
  }
}
BENCHMARK(BM_M2L)->DenseRange(3, 8);

// Traversal only, on a tree built and expanded once. Args: N, threads.
void traversal(benchmark::State& state, Strategy strategy, bool mutual = false) {
  Tree t = build_tree(generate_distribution(Distribution::Cube, static_cast<std::size_t>(state.range(0)), 3));
  EvalConfig cfg;
  cfg.strategy = strategy;
  cfg.p = 4;
  cfg.mac = MacConfig(MacKind::Fmm, 0.8);
  cfg.mutual = mutual;
  cfg.threads = static_cast<int>(state.range(1));
  upward_pass(t, cfg.p);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(t, cfg).stats.p2p_pairs);
}
void BM_DualTree(benchmark::State& s) { traversal(s, Strategy::DualTree); }
void BM_DualTreeMutual(benchmark::State& s) { traversal(s, Strategy::DualTree, true); }
void BM_Treecode(benchmark::State& s) { traversal(s, Strategy::Treecode); }
void BM_ListFmm(benchmark::State& s) { traversal(s, Strategy::ListFmm); }
BENCHMARK(BM_DualTree)->ArgsProduct({{100000}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DualTreeMutual)->Args({100000, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Treecode)->Args({100000, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ListFmm)->Args({100000, 1})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
