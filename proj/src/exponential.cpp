#include "stochexp/exponential.hpp"

#include <algorithm>
#include <cmath>

namespace stochexp {

ExponentialPath exponential_closed_form(const PathBundle& bundle) {
  const std::size_t n = bundle.grid.n_steps;
  ExponentialPath e;
  e.log_z.resize(n + 1);
  e.qv.resize(n + 1);
  e.jumps = bundle.mart.jump_terms;
  e.log_z[0] = 0.0;
  e.qv[0] = 0.0;
  std::size_t jc = 0;
  const auto& jt = bundle.mart.jump_terms;
  for (std::size_t i = 0; i < n; ++i) {
    double lz = e.log_z[i] + bundle.mart.d_gauss[i] + bundle.mart.d_comp[i] -
                0.5 * bundle.mart.d_qv[i];
    while (jc < jt.size() && jt[jc].step == i) {
      lz += std::log1p(jt[jc].phi);
      ++jc;
    }
    e.log_z[i + 1] = lz;
    e.qv[i + 1] = e.qv[i] + bundle.mart.d_qv[i];
  }
  return e;
}

SdeExponential exponential_from_sde(const PathBundle& bundle) {
  const std::size_t n = bundle.grid.n_steps;
  SdeExponential r;
  r.z.resize(n + 1);
  r.z[0] = 1.0;
  std::size_t jc = 0;
  const auto& jt = bundle.mart.jump_terms;
  for (std::size_t i = 0; i < n; ++i) {
    double factor = 1.0 + bundle.mart.d_gauss[i] + bundle.mart.d_comp[i];
    double z = r.z[i] * factor;
    if (z < 0.0) {
      z = 0.0;
      ++r.negative_clips;
    }
    while (jc < jt.size() && jt[jc].step == i) {
      z *= 1.0 + jt[jc].phi;
      ++jc;
    }
    r.z[i + 1] = z;
  }
  return r;
}

double dual_route_gap(const PathBundle& bundle) {
  SdeExponential sde = exponential_from_sde(bundle);
  double zc = std::exp(bundle.log_z.back());
  double zs = sde.z.back();
  return std::abs(zc - zs) / std::max(zc, 1e-300);
}

SupermartingaleScan supermartingale_scan(const ModelSpec& spec,
                                         const TimeGrid& grid,
                                         std::size_t n_checkpoints,
                                         const EnsembleOptions& opts) {
  SupermartingaleScan scan;
  scan.nodes = checkpoint_nodes(grid, n_checkpoints);
  for (std::size_t k : scan.nodes) scan.times.push_back(grid.time(k));

  std::vector<SlotAccumulator> acc;
  acc.reserve(scan.nodes.size());
  for (std::size_t k = 0; k < scan.nodes.size(); ++k)
    acc.emplace_back(opts.n_paths);

  simulate_ensemble(spec, grid, opts,
                    [&](std::size_t p, const PathBundle& b) {
                      for (std::size_t k = 0; k < scan.nodes.size(); ++k)
                        acc[k].add(p, std::exp(b.log_z[scan.nodes[k]]));
                    });

  for (std::size_t k = 0; k < scan.nodes.size(); ++k) {
    MCEstimate e = acc[k].estimate(opts.master_seed, grid.dt);
    if (e.mean > 1.0 + 3.0 * e.se) scan.supermartingale_ok = false;
    scan.ez.push_back(e);
  }
  return scan;
}

}  // namespace stochexp
