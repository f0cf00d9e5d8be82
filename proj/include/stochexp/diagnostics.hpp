// Empirical martingale diagnostics: terminal-mean estimation with a
// heavy-tail guard, the localization ladder E z_{T ^ tau_n} across stopping
// levels, the uniform-integrability diagnostic E[z log z], and the combined
// analytic + empirical verdict.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stochexp/conditions.hpp"
#include "stochexp/exponential.hpp"
#include "stochexp/simulate.hpp"
#include "stochexp/stats.hpp"

namespace stochexp {

struct EzReport {
  MCEstimate est;
  TailGuard guard;
  double level = 0.0;  // 0 = unstopped estimate at T
  double fired_fraction = 0.0;
};

// E[z at T ^ tau] (tau from opts.rule if present), with tail diagnostics.
EzReport estimate_ez(const ModelSpec& spec, const TimeGrid& grid,
                     const EnsembleOptions& opts);

struct LadderLevel {
  double level = 0.0;
  MCEstimate stopped;    // E z_{T ^ tau_n}
  double fired_fraction = 0.0;
  MCEstimate truncated;  // E[z_T 1{tau_n > T}], monotone toward E z_T
  bool within_3se = false;
};

struct LadderReport {
  std::vector<LadderLevel> levels;
  EzReport unstopped;  // terminal estimate from the same ensemble
  bool self_test_pass = false;  // every level within 3 SE of 1
  std::string trend;   // at-one | increasing-toward-limit | plateau | mixed
  bool stopped_at_max_level = false;  // explosion-safe simulation mode
};

struct UiLevel {
  double level = 0.0;
  MCEstimate ez_log_z;  // E[z log z] at T ^ tau_n
  double fired_fraction = 0.0;
};

struct UiReport {
  std::vector<UiLevel> levels;
  std::string trend;  // bounded | growing
};

struct DiagnosticsConfig {
  std::vector<double> levels{1e2, 1e3, 1e4, 1e5};
  std::size_t n_paths = 10000;
  std::uint64_t master_seed = 0;
  unsigned n_workers = 1;
  std::size_t n_checkpoints = 10;
  // Simulate with an online stopping rule at the largest level (required for
  // explosion-suspect models); lower levels are recovered by scanning.
  bool stop_at_max_level = false;
  bool use_running_sup = false;  // statistic flavor for non-markov classes
};

struct DiagnosticsResult {
  EzReport ez;
  LadderReport ladder;
  UiReport ui;
  SupermartingaleScan scan;  // E z_t at checkpoint nodes
};

// One ensemble pass computing all of the above with chunk-ordered
// (worker-count independent) reductions.
DiagnosticsResult run_diagnostics(const ModelSpec& spec, const TimeGrid& grid,
                                  const DiagnosticsConfig& cfg);

LadderReport localization_ladder(const ModelSpec& spec, const TimeGrid& grid,
                                 const DiagnosticsConfig& cfg);
UiReport ui_diagnostic(const ModelSpec& spec, const TimeGrid& grid,
                       const DiagnosticsConfig& cfg);

struct MartingaleVerdict {
  Verdict analytic = Verdict::inconclusive;
  std::string empirical;  // consistent | defect | tail-limited | stopped-only
                          // | inconclusive
  std::string combined;   // both | theorem-pass | empirical-pass |
                          // fail-consistent | contradiction | inconclusive
  double defect_estimate = 0.0;  // max(0, 1 - E z_T)
  std::string note;
};

// Reconciles the analytic certificate with the empirical diagnostics.
// "contradiction" (certificate passes but a clean, tail-guard-silent defect
// is measured) signals a bug somewhere and maps to CLI exit code 2.
MartingaleVerdict martingale_verdict(const ConditionReport& conditions,
                                     const DiagnosticsResult& diag,
                                     bool explosion_suspect);

}  // namespace stochexp
