// Uniform time grid on [0, T].
#pragma once

#include <cstddef>
#include <vector>

namespace stochexp {

struct TimeGrid {
  double horizon = 0.0;   // T
  double dt = 0.0;        // step, = horizon / n_steps after construction
  std::size_t n_steps = 0;

  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  std::size_t n_nodes() const { return n_steps + 1; }

  // Largest node index with time(i) <= t (clamped to n_steps).
  std::size_t node_at(double t) const;
};

// Builds the grid.  Requires T > 0, dt > 0 and T an integer multiple of dt
// (within 1e-9 relative); the stored dt is adjusted to T / n exactly.
TimeGrid make_grid(double horizon, double dt);

// Node indices closest to k*T/count, k = 1..count, deduplicated, ascending.
std::vector<std::size_t> checkpoint_nodes(const TimeGrid& grid,
                                          std::size_t count);

}  // namespace stochexp
