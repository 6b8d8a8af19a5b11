#include "treefmm/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace treefmm {

Tuner::Tuner(Tree& t, TunerOptions opts) : tree_(t), opts_(opts) {
  if (opts_.resolution <= 0.0) throw std::invalid_argument("tuner resolution must be positive");
  if (opts_.reps < 1) throw std::invalid_argument("tuner reps must be at least 1");
  reference_ = reference_sample(t.bodies(), opts_.sample_size, opts_.sample_seed);
}

EvalConfig Tuner::config(int p, double theta) const {
  EvalConfig cfg = opts_.base;
  cfg.strategy = Strategy::DualTree;
  cfg.p = p;
  cfg.mac = MacConfig(opts_.base.mac.kind(), theta);
  cfg.trace = nullptr;
  return cfg;
}

void Tuner::prepare(int p) {
  if (tree_.order() != p) upward_pass(tree_, p);
}

double Tuner::error_at(int p, double theta) {
  prepare(p);
  evaluate_dual_tree(tree_, tree_, config(p, theta));
  ++evaluations_;
  return relative_error(tree_.bodies(), reference_).force;
}

double Tuner::time_at(int p, double theta) {
  prepare(p);
  std::vector<double> t;
  for (int r = 0; r < opts_.reps; ++r) {
    t.push_back(evaluate_dual_tree(tree_, tree_, config(p, theta)).traversal_seconds);
    ++evaluations_;
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

double Tuner::max_theta_for_error(int p, double target, ThetaRange range) {
  if (!(target > 0.0)) throw std::invalid_argument("target error must be positive");
  if (!(range.lo > 0.0) || range.hi > 2.0 || range.lo > range.hi)
    throw std::invalid_argument("theta range must lie within (0, 2]");

  // Grid points k * resolution inside the range.
  const double res = opts_.resolution;
  auto lo = static_cast<long>(std::ceil(range.lo / res - 1e-9));
  auto hi = static_cast<long>(std::floor(range.hi / res + 1e-9));
  if (lo < 1) lo = 1;
  if (hi < lo) throw std::invalid_argument("theta range holds no grid point");
  auto theta = [res](long k) { return static_cast<double>(k) * res; };

  if (error_at(p, theta(hi)) <= target) return theta(hi);
  if (error_at(p, theta(lo)) > target) throw std::runtime_error("target accuracy unreachable at this p");
  // Invariant: lo meets the target, hi does not.
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (error_at(p, theta(mid)) <= target)
      lo = mid;
    else
      hi = mid;
  }
  return theta(lo);
}

Tuner::Row Tuner::tune_row(double target, std::span<const int> p_candidates, ThetaRange range) {
  Row row;
  row.target = target;
  for (int p : p_candidates) {
    std::optional<TuneResult> cell;
    try {
      TuneResult r;
      r.p = p;
      r.theta = max_theta_for_error(p, target, range);
      r.error = error_at(p, r.theta);
      r.seconds = time_at(p, r.theta);
      cell = r;
    } catch (const std::runtime_error&) {
    }
    if (cell && (!row.best || cell->seconds < row.best->seconds ||
                 (cell->seconds == row.best->seconds && cell->p < row.best->p)))
      row.best = cell;
    row.cells.push_back(cell);
  }
  return row;
}

TuneResult Tuner::select_p_theta(double target, std::span<const int> p_candidates, ThetaRange range) {
  if (p_candidates.empty()) throw std::invalid_argument("no candidate orders");
  Row row = tune_row(target, p_candidates, range);
  if (!row.best) throw std::runtime_error("target accuracy unreachable for every candidate p");
  return *row.best;
}

double max_theta_for_error(Tree& t, int p, double target, ThetaRange range, const TunerOptions& opts) {
  return Tuner(t, opts).max_theta_for_error(p, target, range);
}

TuneResult select_p_theta(Tree& t, double target, std::span<const int> p_candidates, ThetaRange range,
                          const TunerOptions& opts) {
  return Tuner(t, opts).select_p_theta(target, p_candidates, range);
}

void write_tune_csv(std::ostream& out, std::span<const int> p_candidates, std::span<const Tuner::Row> rows) {
  out << "target";
  for (int p : p_candidates) out << ",p" << p;
  out << '\n';
  for (const Tuner::Row& row : rows) {
    out << row.target;
    for (const auto& cell : row.cells) {
      out << ',';
      if (cell)
        out << cell->theta << ':' << cell->seconds;
      else
        out << '-';
    }
    out << '\n';
  }
}

}  // namespace treefmm
