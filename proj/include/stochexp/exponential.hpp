// Stochastic exponential of the accumulated local martingale M:
//   dM = sigma dB - (int phi K) dt + jump terms phi,  Delta M = phi > -1.
//
// Primary route (closed form, log domain):
//   log z_t = M^c_t - 1/2 <M^c>_t + sum_{jumps} log(1 + phi)
// Dual route (SDE z = 1 + int z_- dM, per-step Euler factors):
//   z_{i+1} = z_i (1 + sigma dB_i - int phi K dt) * prod (1 + phi_j),
// clipped at zero when a diffusion factor goes negative (counted).
#pragma once

#include <cstddef>
#include <vector>

#include "stochexp/simulate.hpp"
#include "stochexp/stats.hpp"

namespace stochexp {

struct ExponentialPath {
  std::vector<double> log_z;  // n+1 nodes
  std::vector<double> qv;     // n+1 cumulative <M^c>
  std::vector<MartingaleIncrements::JumpTerm> jumps;
};

// Rebuilds the closed-form exponential from the bundle's martingale
// increments; reproduces bundle.log_z bit for bit.
ExponentialPath exponential_closed_form(const PathBundle& bundle);

struct SdeExponential {
  std::vector<double> z;  // n+1 nodes, linear domain
  std::size_t negative_clips = 0;
};

SdeExponential exponential_from_sde(const PathBundle& bundle);

// |z_closed - z_sde| / max(z_closed, floor) at the final node.
double dual_route_gap(const PathBundle& bundle);

struct SupermartingaleScan {
  std::vector<std::size_t> nodes;
  std::vector<double> times;
  std::vector<MCEstimate> ez;  // E z_{t_k}
  // true when no checkpoint mean exceeds 1 by more than 3 SE
  bool supermartingale_ok = true;
};

SupermartingaleScan supermartingale_scan(const ModelSpec& spec,
                                         const TimeGrid& grid,
                                         std::size_t n_checkpoints,
                                         const EnsembleOptions& opts);

}  // namespace stochexp
