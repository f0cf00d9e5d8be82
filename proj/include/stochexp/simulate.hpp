// Driver generation, Euler integration with online stopping, ensembles.
//
// Scheme: left-point Euler with compensated finite-activity jumps,
//   X_{i+1} = X_i + [a - int h K] dt + b sqrt(dt) xi_i + sum_jumps h ,
// jumps applied after the diffusion move using the pre-step history.
// The stochastic exponential z of M (dM = sigma dB - int phi K dt + jumps phi)
// is accumulated alongside in the log domain so stopping rules can watch it.
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stochexp/grid.hpp"
#include "stochexp/model.hpp"

namespace stochexp {

// State or exponential became non-finite and no stopping rule was active.
struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tilted jump acceptance probability exceeded 1: the envelope is too small.
struct TiltUnbounded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DriverJump {
  double time = 0.0;
  double mark = 0.0;
  std::size_t step = 0;  // jump lies in (t_step, t_step+1]
};

struct DriverPath {
  std::vector<double> gauss;       // n_steps * d_brownian standard normals
  std::vector<DriverJump> jumps;   // time-sorted arrivals (or tilt proposals)
  std::vector<double> quad_marks;  // mark quadrature cloud (sampler measures)
};

// Number of quadrature marks drawn per path for sampler-based measures.
inline constexpr std::size_t kMarkQuadrature = 64;

DriverPath simulate_driver(const ModelSpec& spec, const TimeGrid& grid,
                           std::uint64_t master_seed, std::uint64_t path_index);

// Stop at the first grid node whose statistic reaches `level`.  Statistic:
// max(z, |X|^2) for markov models, max(z, sup_{u<=t}|X_u|^2) otherwise.
struct StoppingRule {
  double level = std::numeric_limits<double>::infinity();
  bool use_running_sup = false;
};

struct MartingaleIncrements {
  // Per step: sigma.dB (continuous martingale part), the jump-compensator
  // drift -(int phi K) dt, and the bracket increment |sigma|^2 dt.
  std::vector<double> d_gauss;
  std::vector<double> d_comp;
  std::vector<double> d_qv;
  struct JumpTerm {
    std::size_t step = 0;
    double time = 0.0;
    double phi = 0.0;
    double mark = 0.0;
  };
  std::vector<JumpTerm> jump_terms;
};

struct PathBundle {
  TimeGrid grid;
  std::size_t d_state = 1;
  std::vector<double> times;   // n+1 node times
  std::vector<double> x;       // (n+1) * d states
  std::vector<double> sup_sq;  // n+1 running sup of |X|^2
  std::vector<double> log_z;   // n+1 log stochastic exponential (closed form)
  DriverPath driver;
  MartingaleIncrements mart;
  std::optional<std::size_t> stop_index;
  std::optional<std::size_t> absorb_index;
  std::size_t proposal_jumps = 0;  // tilted runs: proposals seen / accepted
  std::size_t accepted_jumps = 0;

  double state(std::size_t node, std::size_t k = 0) const {
    return x[node * d_state + k];
  }
  double z(std::size_t node) const;
};

// Integrates one path.  `master_seed`/`path_index` are consumed only by the
// thinning stream of tilted models; plain models use the driver exclusively.
// With a stopping rule the path and exponential freeze at the crossing node;
// without one a non-finite state throws NonFiniteState.
PathBundle integrate_path(const ModelSpec& spec, const TimeGrid& grid,
                          const DriverPath& driver,
                          const StoppingRule* rule = nullptr,
                          std::uint64_t master_seed = 0,
                          std::uint64_t path_index = 0);

// First node at which the rule fires on an already-integrated bundle.
struct StopScan {
  bool fired = false;
  std::size_t index = 0;  // crossing node, or n_steps when !fired
};
StopScan scan_stopping(const PathBundle& bundle, const StoppingRule& rule);

// Frozen copy: states, sup, log_z and increments held constant from the
// crossing node on.
PathBundle apply_stopping(const PathBundle& bundle, const StoppingRule& rule);

// History window ending strictly before time s (t_k < s); pre-history
// queries fall back to x0 = node 0.  volterra_y is not reconstructed here.
PathHistoryView history_view(const PathBundle& bundle, double s);

struct EnsembleOptions {
  std::uint64_t master_seed = 0;
  std::size_t n_paths = 0;
  unsigned n_workers = 1;
  const StoppingRule* rule = nullptr;
};

// Consumer is called once per path, possibly from several threads, with a
// worker-local bundle that is only valid during the call.  Consumers must
// write to disjoint per-path slots; reductions should be chunk-ordered (see
// stats.hpp) so results do not depend on n_workers.
using PathConsumer = std::function<void(std::size_t, const PathBundle&)>;

void simulate_ensemble(const ModelSpec& spec, const TimeGrid& grid,
                       const EnsembleOptions& opts,
                       const PathConsumer& consumer);

// Chunk width used to hand paths to workers and to order reductions.
inline constexpr std::size_t kEnsembleChunk = 1024;

}  // namespace stochexp
