// Monte-Carlo estimates with deterministic, worker-count-independent
// reductions.  Values are accumulated per fixed-width path chunk (each chunk
// is processed by exactly one worker) and folded in chunk order.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stochexp/simulate.hpp"

namespace stochexp {

struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // mean -/+ 3 se
  double ci_hi = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

MCEstimate make_estimate(double mean, double se, std::uint64_t n,
                         std::uint64_t seed, double dt);

// |m1 - m2| in units of the combined standard error.
double gap_in_se(const MCEstimate& a, const MCEstimate& b);
bool overlap_3se(const MCEstimate& a, const MCEstimate& b);

// Chunk-ordered streaming mean/variance/max of one scalar per path.
class SlotAccumulator {
 public:
  explicit SlotAccumulator(std::size_t n_paths,
                           std::size_t chunk = kEnsembleChunk);
  // Safe to call concurrently for paths in different chunks.
  void add(std::size_t path_index, double value);
  MCEstimate estimate(std::uint64_t seed, double dt) const;
  double mean() const;
  double max_value() const;
  std::uint64_t count() const;

 private:
  struct Part {
    double sum = 0.0;
    double sumsq = 0.0;
    double maxv = 0.0;
    std::uint64_t n = 0;
    bool touched = false;
  };
  std::size_t chunk_;
  std::vector<Part> parts_;
};

// Dense per-path value store for quantiles and tail inspection.
class ValueStore {
 public:
  explicit ValueStore(std::size_t n_paths);
  void add(std::size_t path_index, double value) { v_[path_index] = value; }
  const std::vector<double>& values() const { return v_; }
  MCEstimate estimate(std::uint64_t seed, double dt) const;
  double quantile(double q) const;  // sorted-copy quantile, q in [0,1]

 private:
  std::vector<double> v_;
};

// Heaviest-weight diagnostics of a nonnegative sample.
struct TailGuard {
  double max_weight = 0.0;
  double top_fraction = 0.001;   // fraction of paths inspected
  double top_mass_share = 0.0;   // their share of the sample mass
  bool dominance_warning = false;  // share above 20%
  double trim_fraction = 0.01;   // removed for the trimmed mean
  double trimmed_mean = 0.0;     // mean with the top trim_fraction zeroed
};

TailGuard tail_guard(const std::vector<double>& weights,
                     double top_fraction = 0.001,
                     double warn_share = 0.20);

double median(std::vector<double> values);

}  // namespace stochexp
