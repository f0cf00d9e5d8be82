#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "stochexp/exponential.hpp"
#include "stochexp/grid.hpp"
#include "stochexp/model.hpp"
#include "stochexp/simulate.hpp"
#include "stochexp/stats.hpp"

using namespace stochexp;

namespace {

ModelSpec sigma_spec(double theta) {
  ModelSpec spec;
  spec.name = "sigma";
  spec.x0 = {0.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [theta](double, double) { return theta; });
  return spec;
}

// mean-zero jump exponent: phi = z with the 1/3 up-law makes int phi K
// cancel to a rounding ulp
ModelSpec exact_jump_spec() {
  ModelSpec spec;
  spec.name = "exact_jump";
  spec.x0 = {0.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; },
      [](double, double, double z) { return z; },
      [](double, double, double z) { return z; });
  spec.levy = two_point_levy(2.0, 1.0 / 3.0);
  return spec;
}

}  // namespace

TEST_CASE("closed form replay is bit identical to the integrator") {
  ModelSpec spec = sigma_spec(1.3);
  TimeGrid grid = make_grid(1.0, 1e-3);
  for (std::size_t p = 0; p < 5; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 7, p);
    PathBundle b = integrate_path(spec, grid, driver);
    ExponentialPath e = exponential_closed_form(b);
    CHECK(e.log_z == b.log_z);  // vector-wide bitwise equality
    CHECK(e.qv.back() ==
          doctest::Approx(1.3 * 1.3 * grid.horizon).epsilon(1e-12));
  }
}

TEST_CASE("dual routes agree exactly for an exactly-compensated pure jump") {
  ModelSpec spec = exact_jump_spec();
  TimeGrid grid = make_grid(1.0, 1e-3);
  bool sawjump = false;
  for (std::size_t p = 0; p < 30; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 13, p);
    PathBundle b = integrate_path(spec, grid, driver);
    // phi = z is centered, so the compensator cancels to the rounding of the
    // stored complement 1 - p_up (one ulp of 1/3 scaled by lambda dt)
    for (double dc : b.mart.d_comp) CHECK(std::abs(dc) <= 1e-18);
    SdeExponential sde = exponential_from_sde(b);
    CHECK(sde.negative_clips == 0);
    CHECK(dual_route_gap(b) <= 1e-12);
    sawjump = sawjump || !driver.jumps.empty();
  }
  CHECK(sawjump);
}

TEST_CASE("sde route gap shrinks with the step") {
  ModelSpec spec = sigma_spec(1.0);
  std::vector<double> gaps;
  for (double dt : {1e-1, 1e-2, 1e-3}) {
    TimeGrid grid = make_grid(1.0, dt);
    std::vector<double> g;
    for (std::size_t p = 0; p < 200; ++p) {
      DriverPath driver = simulate_driver(spec, grid, 19, p);
      PathBundle b = integrate_path(spec, grid, driver);
      g.push_back(dual_route_gap(b));
    }
    gaps.push_back(median(std::move(g)));
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
  CHECK(gaps[2] < 0.05);
}

TEST_CASE("negative euler factors are clipped and counted") {
  ModelSpec spec = sigma_spec(20.0);  // dg = 2 xi at dt = 1e-2: often below -1
  TimeGrid grid = make_grid(1.0, 1e-2);
  bool clipped = false;
  for (std::size_t p = 0; p < 10 && !clipped; ++p) {
    DriverPath driver = simulate_driver(spec, grid, 29, p);
    PathBundle b = integrate_path(spec, grid, driver);
    SdeExponential sde = exponential_from_sde(b);
    if (sde.negative_clips == 0) continue;
    clipped = true;
    // once clipped the sde exponential is absorbed at zero
    bool zero = false;
    for (double z : sde.z) {
      if (z == 0.0) zero = true;
      if (zero) CHECK(z == 0.0);
    }
  }
  CHECK(clipped);
}

TEST_CASE("supermartingale scan sits at one for bounded sigma") {
  ModelSpec spec = sigma_spec(0.8);
  TimeGrid grid = make_grid(1.0, 1e-2);
  EnsembleOptions opts;
  opts.master_seed = 37;
  opts.n_paths = 4000;
  opts.n_workers = 2;
  SupermartingaleScan scan = supermartingale_scan(spec, grid, 10, opts);
  REQUIRE(scan.nodes.size() == 10);
  CHECK(scan.supermartingale_ok);
  for (std::size_t k = 0; k < scan.ez.size(); ++k) {
    CHECK(std::abs(scan.ez[k].mean - 1.0) <= 4.0 * scan.ez[k].se);
  }
  CHECK(scan.times.back() == doctest::Approx(1.0));
}
