#include "stochexp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stochexp {

MCEstimate make_estimate(double mean, double se, std::uint64_t n,
                         std::uint64_t seed, double dt) {
  MCEstimate e;
  e.mean = mean;
  e.se = se;
  e.ci_lo = mean - 3.0 * se;
  e.ci_hi = mean + 3.0 * se;
  e.n_paths = n;
  e.seed = seed;
  e.dt = dt;
  return e;
}

double gap_in_se(const MCEstimate& a, const MCEstimate& b) {
  double comb = std::sqrt(a.se * a.se + b.se * b.se);
  if (comb <= 0.0) return a.mean == b.mean ? 0.0 : INFINITY;
  return std::abs(a.mean - b.mean) / comb;
}

bool overlap_3se(const MCEstimate& a, const MCEstimate& b) {
  return gap_in_se(a, b) <= 3.0;
}

SlotAccumulator::SlotAccumulator(std::size_t n_paths, std::size_t chunk)
    : chunk_(chunk), parts_((n_paths + chunk - 1) / chunk) {
  if (chunk == 0) throw std::invalid_argument("accumulator: chunk == 0");
}

void SlotAccumulator::add(std::size_t path_index, double value) {
  Part& p = parts_[path_index / chunk_];
  p.sum += value;
  p.sumsq += value * value;
  p.maxv = p.touched ? std::max(p.maxv, value) : value;
  p.touched = true;
  ++p.n;
}

MCEstimate SlotAccumulator::estimate(std::uint64_t seed, double dt) const {
  double sum = 0.0, sumsq = 0.0;
  std::uint64_t n = 0;
  for (const Part& p : parts_) {
    sum += p.sum;
    sumsq += p.sumsq;
    n += p.n;
  }
  if (n == 0) return make_estimate(0.0, 0.0, 0, seed, dt);
  double mean = sum / static_cast<double>(n);
  double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
  if (n > 1) var *= static_cast<double>(n) / static_cast<double>(n - 1);
  double se = std::sqrt(var / static_cast<double>(n));
  return make_estimate(mean, se, n, seed, dt);
}

double SlotAccumulator::mean() const {
  double sum = 0.0;
  std::uint64_t n = 0;
  for (const Part& p : parts_) {
    sum += p.sum;
    n += p.n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double SlotAccumulator::max_value() const {
  double m = 0.0;
  bool any = false;
  for (const Part& p : parts_)
    if (p.touched) {
      m = any ? std::max(m, p.maxv) : p.maxv;
      any = true;
    }
  return any ? m : 0.0;
}

std::uint64_t SlotAccumulator::count() const {
  std::uint64_t n = 0;
  for (const Part& p : parts_) n += p.n;
  return n;
}

ValueStore::ValueStore(std::size_t n_paths) : v_(n_paths, 0.0) {}

MCEstimate ValueStore::estimate(std::uint64_t seed, double dt) const {
  // chunk-ordered pairwise-free fold; v_ is already path-ordered
  double sum = 0.0;
  for (double x : v_) sum += x;
  double mean = sum / static_cast<double>(v_.size());
  double ss = 0.0;
  for (double x : v_) ss += (x - mean) * (x - mean);
  std::size_t n = v_.size();
  double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  double se = std::sqrt(var / static_cast<double>(n));
  return make_estimate(mean, se, n, seed, dt);
}

double ValueStore::quantile(double q) const {
  if (v_.empty()) throw std::invalid_argument("quantile of empty store");
  std::vector<double> s = v_;
  std::sort(s.begin(), s.end());
  double pos = q * static_cast<double>(s.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, s.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return s[lo] * (1.0 - frac) + s[hi] * frac;
}

TailGuard tail_guard(const std::vector<double>& weights, double top_fraction,
                     double warn_share) {
  TailGuard g;
  g.top_fraction = top_fraction;
  if (weights.empty()) return g;
  std::vector<double> s = weights;
  std::sort(s.begin(), s.end(), std::greater<double>());
  g.max_weight = s.front();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(top_fraction * static_cast<double>(s.size())));
  if (k == 0) k = 1;
  std::size_t kt = static_cast<std::size_t>(
      std::ceil(g.trim_fraction * static_cast<double>(s.size())));
  if (kt == 0) kt = 1;
  double top = 0.0, trim_top = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    total += s[i];
    if (i < k) top += s[i];
    if (i < kt) trim_top += s[i];
  }
  g.top_mass_share = total > 0.0 ? top / total : 0.0;
  g.dominance_warning = g.top_mass_share > warn_share;
  g.trimmed_mean = (total - trim_top) / static_cast<double>(s.size());
  return g;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  std::nth_element(values.begin(), values.begin() + mid - 1,
                   values.begin() + mid);
  return 0.5 * (values[mid - 1] + hi);
}

}  // namespace stochexp
