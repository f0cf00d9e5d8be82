#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "stochexp/grid.hpp"
#include "stochexp/model.hpp"
#include "stochexp/simulate.hpp"
#include "stochexp/stats.hpp"

using namespace stochexp;

namespace {

ModelSpec constant_sigma_spec(double theta) {
  ModelSpec spec;
  spec.name = "const_sigma";
  spec.x0 = {0.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [theta](double, double) { return theta; });
  return spec;
}

ModelSpec jump_spec(double lambda) {
  ModelSpec spec;
  spec.name = "jumpy";
  spec.x0 = {0.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; },
      [](double, double, double z) { return z; },
      [](double, double, double z) { return std::abs(z); });
  spec.levy = two_point_levy(lambda, 1.0 / 3.0);
  return spec;
}

}  // namespace

TEST_CASE("driver is deterministic per (seed, path)") {
  ModelSpec spec = jump_spec(2.0);
  TimeGrid grid = make_grid(1.0, 1e-2);
  DriverPath d1 = simulate_driver(spec, grid, 11, 5);
  DriverPath d2 = simulate_driver(spec, grid, 11, 5);
  DriverPath d3 = simulate_driver(spec, grid, 11, 6);
  CHECK(d1.gauss == d2.gauss);
  CHECK(d1.jumps.size() == d2.jumps.size());
  CHECK(d1.gauss != d3.gauss);
  REQUIRE(d1.gauss.size() == grid.n_steps);
}

TEST_CASE("driver jumps are sorted, bucketed and have law-consistent marks") {
  ModelSpec spec = jump_spec(2.0);
  TimeGrid grid = make_grid(1.0, 1e-2);
  double count = 0.0, ups = 0.0, total = 0.0;
  const std::size_t n = 2000;
  for (std::size_t p = 0; p < n; ++p) {
    DriverPath d = simulate_driver(spec, grid, 17, p);
    count += static_cast<double>(d.jumps.size());
    double prev = 0.0;
    for (const DriverJump& j : d.jumps) {
      CHECK(j.time >= prev);
      prev = j.time;
      CHECK(j.time > grid.time(j.step));
      CHECK(j.time <= grid.time(j.step + 1) + 1e-12);
      CHECK((j.mark == 1.0 || j.mark == -0.5));
      total += 1.0;
      if (j.mark == 1.0) ups += 1.0;
    }
  }
  // Poisson(lambda T) arrivals: mean 2, se sqrt(2/n)
  const double mean = count / static_cast<double>(n);
  CHECK(std::abs(mean - 2.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
  // mark law p_up = 1/3
  const double frac_up = ups / total;
  CHECK(std::abs(frac_up - 1.0 / 3.0) <
        4.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / total));
}

TEST_CASE("constant-sigma exponent matches the closed form by hand") {
  const double theta = 0.7;
  ModelSpec spec = constant_sigma_spec(theta);
  TimeGrid grid = make_grid(1.0, 1e-2);
  DriverPath driver = simulate_driver(spec, grid, 3, 0);
  PathBundle b = integrate_path(spec, grid, driver);

  const double sdt = std::sqrt(grid.dt);
  double lz = 0.0;
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    lz += theta * sdt * driver.gauss[i] - 0.5 * theta * theta * grid.dt;
    CHECK(b.mart.d_gauss[i] ==
          doctest::Approx(theta * sdt * driver.gauss[i]).epsilon(1e-14));
    CHECK(b.mart.d_qv[i] == doctest::Approx(theta * theta * grid.dt));
    CHECK(b.mart.d_comp[i] == 0.0);
  }
  CHECK(b.log_z.back() == doctest::Approx(lz).epsilon(1e-12));
  // X = brownian path
  double x = 0.0;
  for (std::size_t i = 0; i < grid.n_steps; ++i) x += sdt * driver.gauss[i];
  CHECK(b.state(grid.n_steps) == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("pure jump path applies h, phi and the compensator drift") {
  ModelSpec spec = jump_spec(1.0);
  TimeGrid grid = make_grid(1.0, 1e-2);
  // find a path with at least one jump
  for (std::size_t p = 0; p < 50; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 23, p);
    if (driver.jumps.empty()) continue;
    PathBundle b = integrate_path(spec, grid, driver);
    CHECK(b.mart.jump_terms.size() == driver.jumps.size());
    // state = sum of marks so far (a = b = 0, int h K = 0 for this law)
    double xs = 0.0;
    for (const DriverJump& j : driver.jumps) xs += j.mark;
    CHECK(b.state(grid.n_steps) == doctest::Approx(xs).epsilon(1e-12));
    // log z = sum log(1 + |mark|) - int phi K dt with exact two-point law:
    // int phi K = lambda E|z| = 1 * (1/3 + (2/3)(1/2)) = 2/3
    double lz = 0.0;
    for (const DriverJump& j : driver.jumps) lz += std::log1p(std::abs(j.mark));
    lz -= (2.0 / 3.0) * grid.horizon;
    CHECK(b.log_z.back() == doctest::Approx(lz).epsilon(1e-9));
    return;
  }
  FAIL("no jumping path found in 50 tries");
}

TEST_CASE("stopping freezes the path at the crossing node") {
  ModelSpec spec = constant_sigma_spec(2.0);
  TimeGrid grid = make_grid(1.0, 1e-3);
  StoppingRule rule;
  rule.level = 1.5;  // fires on z or on |X|^2 = X^2 early
  for (std::size_t p = 0; p < 20; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 31, p);
    PathBundle stopped = integrate_path(spec, grid, driver, &rule);
    if (!stopped.stop_index) continue;
    const std::size_t k = *stopped.stop_index;
    REQUIRE(k < grid.n_steps);
    const double zs = stopped.z(k);
    const double xs = stopped.state(k);
    CHECK((zs >= rule.level || xs * xs >= rule.level));
    for (std::size_t i = k; i <= grid.n_steps; ++i) {
      CHECK(stopped.state(i) == xs);
      CHECK(stopped.log_z[i] == stopped.log_z[k]);
    }
    for (std::size_t i = k; i < grid.n_steps; ++i) {
      CHECK(stopped.mart.d_gauss[i] == 0.0);
      CHECK(stopped.mart.d_qv[i] == 0.0);
    }
    // node before the crossing is strictly below the level
    if (k > 0) {
      const double zp = stopped.z(k - 1);
      const double xp = stopped.state(k - 1);
      CHECK(zp < rule.level);
      CHECK(xp * xp < rule.level);
    }
    return;
  }
  FAIL("no stopped path found in 20 tries");
}

TEST_CASE("scan plus apply equals online stopping") {
  ModelSpec spec = constant_sigma_spec(2.0);
  TimeGrid grid = make_grid(1.0, 1e-3);
  StoppingRule rule;
  rule.level = 2.0;
  for (std::size_t p = 0; p < 10; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 41, p);
    PathBundle online = integrate_path(spec, grid, driver, &rule);
    PathBundle free = integrate_path(spec, grid, driver);
    StopScan scan = scan_stopping(free, rule);
    PathBundle frozen = apply_stopping(free, rule);
    CHECK(online.stop_index.has_value() == scan.fired);
    if (scan.fired) {
      CHECK(*online.stop_index == scan.index);
      CHECK(*frozen.stop_index == scan.index);
    }
    CHECK(online.x == frozen.x);
    CHECK(online.log_z == frozen.log_z);
  }
}

TEST_CASE("absorption clamps the state at zero and freezes it") {
  ModelSpec spec;
  spec.x0 = {1e-3};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; },
      [](double, double x) { return std::sqrt(std::max(x, 0.0)); },
      [](double, double x) { return std::sqrt(std::max(x, 0.0)); });
  spec.absorb_at_zero = true;
  TimeGrid grid = make_grid(1.0, 1e-3);
  bool found = false;
  for (std::size_t p = 0; p < 40 && !found; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 53, p);
    PathBundle b = integrate_path(spec, grid, driver);
    if (!b.absorb_index) continue;
    found = true;
    const std::size_t k = *b.absorb_index;
    for (std::size_t i = k; i <= grid.n_steps; ++i) CHECK(b.state(i) == 0.0);
    // sigma(0) = 0: the exponential is constant after absorption
    for (std::size_t i = k; i < grid.n_steps; ++i)
      CHECK(b.mart.d_gauss[i] == 0.0);
    CHECK(b.log_z.back() == b.log_z[k]);
  }
  CHECK(found);
}

TEST_CASE("non-finite state throws without a rule and freezes with one") {
  ModelSpec spec;
  spec.x0 = {1.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return x * x * x * std::abs(x); },  // hard blowup
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
  TimeGrid grid = make_grid(1.0, 1e-3);
  DriverPath driver = simulate_driver(spec, grid, 61, 0);
  CHECK_THROWS_AS(integrate_path(spec, grid, driver), NonFiniteState);

  StoppingRule rule;
  rule.level = 1e6;
  PathBundle b = integrate_path(spec, grid, driver, &rule);
  REQUIRE(b.stop_index.has_value());
  CHECK(std::isfinite(b.state(grid.n_steps)));
  CHECK(std::isfinite(b.log_z.back()));
}

TEST_CASE("sigma cap clamps the exponent load") {
  ModelSpec spec = constant_sigma_spec(1000.0);
  spec.sigma_cap_per_sqrt_dt = 2.0;
  TimeGrid grid = make_grid(1.0, 1e-2);  // cap = 2 / 0.1 = 20
  DriverPath driver = simulate_driver(spec, grid, 71, 0);
  PathBundle b = integrate_path(spec, grid, driver);
  const double cap = 2.0 / std::sqrt(grid.dt);
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    CHECK(b.mart.d_qv[i] == doctest::Approx(cap * cap * grid.dt));
    CHECK(b.mart.d_gauss[i] ==
          doctest::Approx(cap * std::sqrt(grid.dt) * driver.gauss[i]));
  }
}

TEST_CASE("history view exposes the strict past") {
  ModelSpec spec = constant_sigma_spec(1.0);
  TimeGrid grid = make_grid(1.0, 0.25);
  DriverPath driver = simulate_driver(spec, grid, 81, 0);
  PathBundle b = integrate_path(spec, grid, driver);
  PathHistoryView v = history_view(b, 0.5);
  CHECK(v.time() == 0.5);
  CHECK(v.count() == 2);  // nodes at t = 0, 0.25 only (strictly before 0.5)
  CHECK(v.left_scalar() == b.state(1));
  CHECK(v.state_before(0.25)[0] == b.state(1));
  CHECK(v.state_before(0.1)[0] == b.state(0));
  CHECK(v.state_before(-1.0)[0] == b.state(0));
}

TEST_CASE("ensemble reductions are worker-count independent") {
  ModelSpec spec = constant_sigma_spec(1.5);
  TimeGrid grid = make_grid(1.0, 1e-2);
  const std::size_t n = 3000;

  auto run = [&](unsigned workers) {
    SlotAccumulator acc(n);
    EnsembleOptions opts;
    opts.master_seed = 2024;
    opts.n_paths = n;
    opts.n_workers = workers;
    simulate_ensemble(spec, grid, opts,
                      [&](std::size_t p, const PathBundle& b) {
                        acc.add(p, b.z(grid.n_steps));
                      });
    return acc.estimate(opts.master_seed, grid.dt);
  };

  MCEstimate e1 = run(1);
  MCEstimate e3 = run(3);
  CHECK(e1.mean == e3.mean);  // bitwise
  CHECK(e1.se == e3.se);
  CHECK(e1.n_paths == n);
  // E z_T = 1 for bounded sigma
  CHECK(std::abs(e1.mean - 1.0) <= 3.0 * e1.se);
}

TEST_CASE("tilted jumps refuse an envelope below 1 + phi") {
  ModelSpec spec = jump_spec(1.0);
  spec.jump_tilt = JumpTilt{1.0};  // phi = |z| up to 1: needs envelope 2
  spec.girsanov_tilted = true;
  TimeGrid grid = make_grid(1.0, 1e-2);
  bool threw = false;
  for (std::size_t p = 0; p < 50 && !threw; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 91, p);
    try {
      integrate_path(spec, grid, driver, nullptr, 91, p);
    } catch (const TiltUnbounded&) {
      threw = true;
    }
  }
  CHECK(threw);
}

TEST_CASE("thinning reproduces the tilted arrival rate") {
  // constant tilt phi = c: Q-side arrivals are Poisson(lambda (1+c) T)
  const double c = 0.5;
  ModelSpec spec = jump_spec(1.0);
  spec.coeffs.phi = [c](double, const PathHistoryView&, double) { return c; };
  spec.jump_tilt = JumpTilt{1.0 + c};
  spec.girsanov_tilted = true;
  TimeGrid grid = make_grid(1.0, 1e-2);
  const std::size_t n = 3000;
  double accepted = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 101, p);
    PathBundle b = integrate_path(spec, grid, driver, nullptr, 101, p);
    accepted += static_cast<double>(b.accepted_jumps);
    CHECK(b.accepted_jumps == b.proposal_jumps);  // exact envelope: no draws
  }
  const double rate = accepted / static_cast<double>(n);
  CHECK(std::abs(rate - 1.5) < 4.0 * std::sqrt(1.5 / static_cast<double>(n)));
}

TEST_CASE("exact sampler replaces euler and reconstructs the driver") {
  ModelSpec spec;
  spec.x0 = {0.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double s, double x) { return -x / std::max(1.0 - s, 1e-9); },
      [](double, double) { return 1.0; }, [](double, double x) { return x; });
  spec.exact_sampler = [](const TimeGrid& grid, std::span<const double> xi,
                          std::span<double> x, std::span<double> db) {
    x[0] = 0.0;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
      const double r = (1.0 - grid.time(i + 1)) / (1.0 - grid.time(i));
      x[i + 1] = x[i] * r + std::sqrt(grid.dt * r) * xi[i];
      db[i] = (x[i + 1] - x[i]) +
              x[i] * grid.dt / std::max(1.0 - grid.time(i), 1e-6);
    }
  };
  TimeGrid grid = make_grid(1.0, 1e-2);
  DriverPath driver = simulate_driver(spec, grid, 111, 0);
  PathBundle b = integrate_path(spec, grid, driver);
  // terminal pin
  CHECK(b.state(grid.n_steps) == 0.0);
  // the sampled path reproduces the recurrence from the driver normals
  double x = 0.0;
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    const double r = (1.0 - grid.time(i + 1)) / (1.0 - grid.time(i));
    x = x * r + std::sqrt(grid.dt * r) * driver.gauss[i];
    CHECK(b.state(i + 1) == doctest::Approx(x).epsilon(1e-12));
  }
}
