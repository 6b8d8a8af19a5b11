#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <vector>

#include "treefmm/mac.hpp"
#include "treefmm/p2p.hpp"
#include "treefmm/tree.hpp"

namespace treefmm {

enum class Strategy { Treecode, ListFmm, DualTree };

enum class InteractionKind { P2P, M2L, M2P };

/// One kernel application: every body in the target cell's range receives
/// the contribution of every body in the source cell's range. Mutual
/// applications are recorded once per direction.
struct Interaction {
  InteractionKind kind;
  std::uint32_t target;
  std::uint32_t source;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// Thread-safe recorder of kernel applications, for small-N verification.
class InteractionTrace {
 public:
  void add(InteractionKind kind, std::uint32_t target, std::uint32_t source);
  /// Records in a canonical (sorted) order.
  std::vector<Interaction> records() const;
  void clear();
  /// CSV with header `type,targetCell,sourceCell`.
  void write_csv(std::ostream& out) const;

 private:
  mutable std::mutex mu_;
  std::vector<Interaction> records_;
};

struct EvalConfig {
  Strategy strategy = Strategy::DualTree;
  MacConfig mac{MacKind::Fmm, 0.5};
  int p = 4;
  /// Apply each pair interaction to both sides (dual tree on a single tree
  /// only; the other strategies ignore it).
  bool mutual = false;
  /// Minimum body count of a split target cell for a new task.
  std::size_t task_grain = 1000;
  /// 0 keeps the OpenMP default.
  int threads = 0;
  P2PMode p2p_mode = P2PMode::Scalar;
  /// Time every kernel call; adds clock overhead to each call.
  bool profile_kernels = false;
  InteractionTrace* trace = nullptr;
};

struct EvalReport {
  KernelStats stats;
  double build_seconds = 0.0;
  double upward_seconds = 0.0;
  double traversal_seconds = 0.0;
  double downward_seconds = 0.0;
  double total_seconds = 0.0;
  int threads = 1;
  std::optional<double> force_error;
  std::optional<double> potential_error;
};

/// Alg. 1 style: every target leaf walks the source tree with its own
/// stack; leaves get P2P, accepted cells M2P, the rest are opened.
/// Requires upward_pass(t, cfg.p). Results land in t.bodies().
EvalReport evaluate_treecode(Tree& t, const EvalConfig& cfg);

/// Classic FMM with explicit lists from Morton arithmetic: M2L from the
/// children of the parent's neighbours that are not neighbours, P2P with
/// neighbour leaves. Coarser adjacent leaves are handled by P2P and finer
/// separated cells by M2P so adaptive trees stay complete. Requires cubic
/// cells (throws std::invalid_argument otherwise).
EvalReport evaluate_list_fmm(Tree& t, const EvalConfig& cfg);

/// Simultaneous traversal of a target and a source tree (which may be the
/// same object). Both trees need upward_pass(cfg.p).
EvalReport evaluate_dual_tree(Tree& target, Tree& source, const EvalConfig& cfg);

/// Dispatches on cfg.strategy over a single tree.
EvalReport evaluate(Tree& t, const EvalConfig& cfg);

/// Interaction bookkeeping for one cell pair of the dual traversal.
enum class PairKind {
  Directed,  // writes to the target side only
  Mutual,    // distinct cells, both sides written
  Self,      // a cell with itself
};

enum class SpawnDecision { SpawnTask, Inline };

/// True when Alg. 3 splits the target of (target, source): the non-leaf of
/// a leaf/non-leaf pair, otherwise the larger rmax, ties going to the target.
bool splits_target(const Cell& target, const Cell& source);

/// Whether splitting this pair forks tasks. Only target splits fork, so
/// sibling tasks own disjoint target subtrees; mutual cross pairs never fork
/// since they write to both sides.
SpawnDecision spawn_policy(const Cell& target, const Cell& source, PairKind kind, const EvalConfig& cfg);

/// Builds the tree, runs the upward pass, the configured strategy and the
/// downward pass, then writes potentials and forces back into `ps`.
/// Optionally reports the shape of the tree it built.
EvalReport run_evaluation(ParticleSet& ps, const BuildOptions& build, const EvalConfig& cfg,
                          TreeStats* tree_shape = nullptr);

}  // namespace treefmm
