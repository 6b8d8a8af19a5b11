#pragma once

#include "treefmm/tree.hpp"

namespace treefmm {

enum class MacKind {
  BarnesHut,  // 2 rmax_s / R < theta; target treated as a point
  Bmax,       // bmax_s / R < theta
  Fmm,        // (bmax_t + bmax_s) / R < theta
};

/// Acceptance criterion and opening angle. Construction validates
/// 0 < theta < 10.
class MacConfig {
 public:
  MacConfig() = default;
  MacConfig(MacKind kind, double theta);

  MacKind kind() const { return kind_; }
  double theta() const { return theta_; }

 private:
  MacKind kind_ = MacKind::Fmm;
  double theta_ = 0.5;
};

/// Whether the source cell's expansion may stand in for its bodies when
/// seen from the target cell. Coincident centers always reject.
bool accept(const MacConfig& cfg, const Cell& target, const Cell& source);

/// Relative error scale ((bmax_t + bmax_s) / R)^p, or (bmax_s / R)^p for the
/// point-target criteria. +infinity when the centers coincide.
double error_bound(const MacConfig& cfg, int p, const Cell& target, const Cell& source);

}  // namespace treefmm
