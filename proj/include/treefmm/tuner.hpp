#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "treefmm/accuracy.hpp"
#include "treefmm/traversal.hpp"

namespace treefmm {

struct ThetaRange {
  double lo = 0.1;
  double hi = 1.5;
};

struct TunerOptions {
  std::size_t sample_size = 1000;
  std::uint64_t sample_seed = 7;
  double resolution = 0.01;
  /// Timed repetitions per (p, theta); the median is kept.
  int reps = 3;
  /// Strategy is forced to DualTree; mac.kind, task_grain and threads are
  /// taken from here.
  EvalConfig base{};
};

struct TuneResult {
  int p = 0;
  double theta = 0.0;
  double seconds = 0.0;  // dual tree traversal only
  double error = 0.0;
};

/// Searches (p, theta) on one tree. The reference sample is computed once
/// on construction; the tree's expansions are rebuilt whenever p changes.
class Tuner {
 public:
  explicit Tuner(Tree& t, TunerOptions opts = {});

  /// Relative L2 force error of the dual tree traversal at (p, theta).
  double error_at(int p, double theta);
  /// Median traversal time at (p, theta).
  double time_at(int p, double theta);

  /// Largest theta on the resolution grid within `range` whose error is at
  /// most `target`, by bisection. Throws std::runtime_error("target accuracy
  /// unreachable at this p") when even range.lo misses the target.
  double max_theta_for_error(int p, double target, ThetaRange range = {});

  /// Minimum-time (p, theta) over the candidates; ties go to the smaller p.
  /// Candidates that cannot reach the target are skipped; throws when none
  /// can.
  TuneResult select_p_theta(double target, std::span<const int> p_candidates, ThetaRange range = {});

  /// The same search with every candidate's outcome kept.
  struct Row {
    double target = 0.0;
    std::vector<std::optional<TuneResult>> cells;  // one per candidate, empty when unreachable
    std::optional<TuneResult> best;
  };
  Row tune_row(double target, std::span<const int> p_candidates, ThetaRange range = {});

  /// Dual tree evaluations performed so far.
  std::size_t evaluations() const { return evaluations_; }

 private:
  EvalConfig config(int p, double theta) const;
  void prepare(int p);

  Tree& tree_;
  TunerOptions opts_;
  ReferenceSample reference_;
  std::size_t evaluations_ = 0;
};

double max_theta_for_error(Tree& t, int p, double target, ThetaRange range = {}, const TunerOptions& opts = {});
TuneResult select_p_theta(Tree& t, double target, std::span<const int> p_candidates, ThetaRange range = {},
                          const TunerOptions& opts = {});

/// Table layout: one row per target, one column per p; each cell holds
/// `theta:seconds` or `-` when the target is unreachable.
void write_tune_csv(std::ostream& out, std::span<const int> p_candidates, std::span<const Tuner::Row> rows);

}  // namespace treefmm
