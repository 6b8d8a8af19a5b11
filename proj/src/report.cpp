#include "treefmm/report.hpp"

#include <cmath>
#include <stdexcept>

namespace treefmm {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Treecode: return "treecode";
    case Strategy::ListFmm: return "listfmm";
    case Strategy::DualTree: return "dualtree";
  }
  return "?";
}

std::string_view to_string(MacKind k) {
  switch (k) {
    case MacKind::BarnesHut: return "bh";
    case MacKind::Bmax: return "bmax";
    case MacKind::Fmm: return "fmm";
  }
  return "?";
}

std::string_view to_string(CellShape s) { return s == CellShape::Cubic ? "cubic" : "rect"; }

Strategy parse_strategy(std::string_view s) {
  for (Strategy v : {Strategy::Treecode, Strategy::ListFmm, Strategy::DualTree})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown strategy: " + std::string(s));
}

MacKind parse_mac(std::string_view s) {
  for (MacKind v : {MacKind::BarnesHut, MacKind::Bmax, MacKind::Fmm})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown mac: " + std::string(s));
}

CellShape parse_shape(std::string_view s) {
  for (CellShape v : {CellShape::Cubic, CellShape::Rectangular})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown shape: " + std::string(s));
}

namespace {

double ms(double seconds) { return std::round(seconds * 1e6) / 1e3; }

}  // namespace

nlohmann::json to_json(const KernelStats& s) {
  return {{"p2p_calls", s.p2p_calls},     {"p2p_pairs", s.p2p_pairs},
          {"p2p_flops", s.p2p_flops},     {"coincident_pairs", s.coincident_pairs},
          {"m2l_calls", s.m2l_calls},     {"m2p_calls", s.m2p_calls},
          {"p2p_ms", ms(s.p2p_seconds)},  {"m2l_ms", ms(s.m2l_seconds)},
          {"m2p_ms", ms(s.m2p_seconds)}};
}

nlohmann::json to_json(const TreeStats& s) {
  return {{"depth", s.depth},
          {"cells", s.cells},
          {"leaves", s.leaves},
          {"max_leaf_bodies", s.max_leaf_bodies},
          {"leaf_occupancy", s.leaf_occupancy}};
}

nlohmann::json report_json(const RunInfo& info, const EvalConfig& cfg, const EvalReport& r,
                           const std::optional<TreeStats>& tree) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = {{"n", info.n},
                 {"ncrit", info.ncrit},
                 {"shape", to_string(info.shape)},
                 {"strategy", to_string(cfg.strategy)},
                 {"mac", to_string(cfg.mac.kind())},
                 {"theta", cfg.mac.theta()},
                 {"p", cfg.p},
                 {"mutual", cfg.mutual},
                 {"task_grain", cfg.task_grain},
                 {"threads", r.threads},
                 {"seed", info.seed},
                 {"input", info.input},
                 {"reps", info.reps}};
  j["timings_ms"] = {{"build", ms(r.build_seconds)},
                     {"upward", ms(r.upward_seconds)},
                     {"traversal", ms(r.traversal_seconds)},
                     {"downward", ms(r.downward_seconds)},
                     {"total", ms(r.total_seconds)}};
  j["kernels"] = to_json(r.stats);
  j["tree"] = tree ? to_json(*tree) : nlohmann::json(nullptr);
  if (r.force_error)
    j["accuracy"] = {{"force_rel_l2", *r.force_error}, {"potential_rel_l2", r.potential_error.value_or(0.0)}};
  else
    j["accuracy"] = nullptr;
  return j;
}

}  // namespace treefmm
