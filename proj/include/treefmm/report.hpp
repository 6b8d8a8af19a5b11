#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "treefmm/traversal.hpp"
#include "treefmm/tree.hpp"

namespace treefmm {

/// Bumped whenever a field is renamed or removed.
inline constexpr int kReportSchemaVersion = 1;

std::string_view to_string(Strategy s);
std::string_view to_string(MacKind k);
std::string_view to_string(CellShape s);
/// Inverse of to_string; std::invalid_argument on an unknown name.
Strategy parse_strategy(std::string_view s);
MacKind parse_mac(std::string_view s);
CellShape parse_shape(std::string_view s);

/// Inputs of a run that are not part of EvalConfig.
struct RunInfo {
  std::size_t n = 0;
  std::size_t ncrit = 30;
  CellShape shape = CellShape::Cubic;
  std::uint64_t seed = 0;
  std::string input;  // empty for generated particles
  int reps = 1;
};

nlohmann::json to_json(const KernelStats& s);
nlohmann::json to_json(const TreeStats& s);

/// Versioned report: config, timings in milliseconds, kernel counts, tree
/// shape and, when present, the measured errors.
nlohmann::json report_json(const RunInfo& info, const EvalConfig& cfg, const EvalReport& r,
                           const std::optional<TreeStats>& tree = std::nullopt);

}  // namespace treefmm
