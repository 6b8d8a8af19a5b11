#include "treefmm/mac.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace treefmm {

MacConfig::MacConfig(MacKind kind, double theta) : kind_(kind), theta_(theta) {
  if (!(theta > 0.0) || !(theta < 10.0)) throw std::invalid_argument("theta must lie in (0, 10)");
}

namespace {

double radius_sum(MacKind kind, const Cell& target, const Cell& source) {
  switch (kind) {
    case MacKind::BarnesHut: return 2.0 * source.rmax;
    case MacKind::Bmax: return source.bmax;
    case MacKind::Fmm: return target.bmax + source.bmax;
  }
  return 0.0;
}

}  // namespace

bool accept(const MacConfig& cfg, const Cell& target, const Cell& source) {
  const double r = norm(target.center - source.center);
  if (r == 0.0) return false;
  return radius_sum(cfg.kind(), target, source) < cfg.theta() * r;
}

double error_bound(const MacConfig& cfg, int p, const Cell& target, const Cell& source) {
  const double r = norm(target.center - source.center);
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  const double radii = cfg.kind() == MacKind::Fmm ? target.bmax + source.bmax : source.bmax;
  return std::pow(radii / r, p);
}

}  // namespace treefmm
