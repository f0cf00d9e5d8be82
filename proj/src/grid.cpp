#include "stochexp/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace stochexp {

std::size_t TimeGrid::node_at(double t) const {
  if (t <= 0.0) return 0;
  auto i = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
  return i > n_steps ? n_steps : i;
}

TimeGrid make_grid(double horizon, double dt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("grid: horizon must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("grid: dt must be > 0");
  if (dt > horizon) throw std::invalid_argument("grid: dt exceeds horizon");
  double ratio = horizon / dt;
  double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("grid: horizon must be a multiple of dt");
  TimeGrid g;
  g.horizon = horizon;
  g.n_steps = static_cast<std::size_t>(n);
  g.dt = horizon / n;
  return g;
}

std::vector<std::size_t> checkpoint_nodes(const TimeGrid& grid,
                                          std::size_t count) {
  if (count == 0) throw std::invalid_argument("checkpoint_nodes: count == 0");
  std::vector<std::size_t> nodes;
  nodes.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    double t = grid.horizon * static_cast<double>(k) / static_cast<double>(count);
    std::size_t i = grid.node_at(t);
    if (i == 0) i = 1;
    if (nodes.empty() || nodes.back() != i) nodes.push_back(i);
  }
  return nodes;
}

}  // namespace stochexp
