#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stochexp/stats.hpp"

using namespace stochexp;

TEST_CASE("slot accumulator reproduces the plain mean and se") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(2.0, 3.0);
  const std::size_t n = 5000;
  std::vector<double> vals(n);
  for (auto& v : vals) v = gauss(rng);

  SlotAccumulator acc(n);
  for (std::size_t i = 0; i < n; ++i) acc.add(i, vals[i]);

  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  const double se = std::sqrt(var / static_cast<double>(n));

  MCEstimate est = acc.estimate(7, 1e-3);
  CHECK(est.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(est.se == doctest::Approx(se).epsilon(1e-9));
  CHECK(est.n_paths == n);
  CHECK(est.ci_lo == doctest::Approx(mean - 3 * se));
  CHECK(est.ci_hi == doctest::Approx(mean + 3 * se));
  CHECK(acc.count() == n);
}

TEST_CASE("slot accumulator is chunk-schedule independent") {
  // workers pick up whole chunks in arbitrary order but walk each chunk in
  // path order; permuting the chunk visits must not move a single bit
  const std::size_t n = 3000;  // spans three chunks of kEnsembleChunk = 1024
  std::vector<double> vals(n);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : vals) v = u(rng);

  SlotAccumulator fwd(n), perm(n);
  for (std::size_t i = 0; i < n; ++i) fwd.add(i, vals[i]);
  for (std::size_t c : {2, 0, 1}) {
    const std::size_t lo = c * kEnsembleChunk;
    const std::size_t hi = std::min(n, lo + kEnsembleChunk);
    for (std::size_t i = lo; i < hi; ++i) perm.add(i, vals[i]);
  }
  CHECK(fwd.estimate(0, 0.1).mean == perm.estimate(0, 0.1).mean);
  CHECK(fwd.estimate(0, 0.1).se == perm.estimate(0, 0.1).se);
  CHECK(fwd.max_value() == perm.max_value());
}

TEST_CASE("value store quantiles") {
  ValueStore store(101);
  for (std::size_t i = 0; i <= 100; ++i)
    store.add(i, static_cast<double>(i));
  CHECK(store.quantile(0.0) == 0.0);
  CHECK(store.quantile(1.0) == 100.0);
  CHECK(store.quantile(0.5) == doctest::Approx(50.0));
}

TEST_CASE("gap and overlap helpers") {
  MCEstimate a = make_estimate(1.0, 0.01, 100, 0, 0.1);
  MCEstimate b = make_estimate(1.05, 0.01, 100, 0, 0.1);
  // combined se = sqrt(2)/100, gap = 0.05
  CHECK(gap_in_se(a, b) == doctest::Approx(0.05 / std::sqrt(2e-4)));
  CHECK(!overlap_3se(a, b));
  MCEstimate c = make_estimate(1.02, 0.01, 100, 0, 0.1);
  CHECK(overlap_3se(a, c));
}

TEST_CASE("tail guard flags dominated samples") {
  // 2000 unit weights plus one enormous one
  std::vector<double> w(2000, 1.0);
  w.push_back(3000.0);
  TailGuard g = tail_guard(w);
  CHECK(g.max_weight == 3000.0);
  CHECK(g.top_mass_share > 0.5);
  CHECK(g.dominance_warning);
  // the 1% trim removes the spike: trimmed mean is far below the raw mean
  const double raw = 5000.0 / 2001.0;
  CHECK(g.trimmed_mean < 0.5 * raw);

  std::vector<double> flat(2000, 1.0);
  TailGuard f = tail_guard(flat);
  CHECK(!f.dominance_warning);
  CHECK(f.top_mass_share == doctest::Approx(2.0 / 2000.0));
  CHECK(f.trimmed_mean == doctest::Approx((2000.0 - 20.0) / 2000.0));
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}
