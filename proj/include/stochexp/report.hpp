// JSON report assembly for the CLI.  For a fixed configuration the rendered
// bytes are deterministic: nothing execution-dependent (worker count, wall
// time) enters the document unless timestamps are enabled.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stochexp/conditions.hpp"
#include "stochexp/diagnostics.hpp"
#include "stochexp/measure_change.hpp"

namespace stochexp {

using Json = nlohmann::ordered_json;

struct ReportConfig {
  std::string model;
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> levels;
  bool girsanov = false;
  double envelope = 1.0;
  double indicator_threshold = 1.0;
  bool stop_at_max_level = false;
  bool use_running_sup = false;
  bool with_timestamp = true;
};

Json estimate_json(const MCEstimate& est);
Json conditions_json(const ConditionReport& rep, const ExplosionProbe& probe);
Json ez_json(const EzReport& rep);
Json diagnostics_json(const DiagnosticsResult& diag);
Json girsanov_json(const GirsanovReport& rep);
Json verdict_json(const MartingaleVerdict& v);

struct RunArtifacts {
  ConditionReport conditions;
  ExplosionProbe explosion;
  DiagnosticsResult diag;
  std::optional<GirsanovReport> girsanov;
  MartingaleVerdict verdict;
  double elapsed_seconds = 0.0;
};

Json build_run_report(const ReportConfig& cfg, const RunArtifacts& art);

// dump with 2-space indent plus trailing newline
std::string render_report(const Json& j);

// Per-node dump of one path: time, state components, z, stopped flag.
void write_path_csv(std::ostream& os, const PathBundle& bundle);

}  // namespace stochexp
