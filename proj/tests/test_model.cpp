#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "stochexp/model.hpp"

using namespace stochexp;

namespace {

ModelSpec diffusion_spec() {
  ModelSpec spec;
  spec.name = "test";
  spec.x0 = {1.0};
  spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return -x; }, [](double, double) { return 1.0; },
      [](double, double x) { return 0.5 * x; });
  return spec;
}

}  // namespace

TEST_CASE("two point levy has exact moments") {
  LevyMeasure m = two_point_levy(2.0, 1.0 / 3.0);
  CHECK(m.total_mass == doctest::Approx(2.0));
  REQUIRE(m.atoms.size() == 2);
  double mean = 0.0, second = 0.0;
  for (const MarkAtom& a : m.atoms) {
    mean += a.mark * a.prob * m.total_mass;
    second += a.mark * a.mark * a.prob * m.total_mass;
  }
  // p_up = 1/3 with marks {+1, -1/2} centers the law; the stored complement
  // 1 - 1/3 rounds, so the first moment cancels only to machine precision
  CHECK(std::abs(mean) <= 1e-15);
  CHECK(second == doctest::Approx(m.second_moment).epsilon(1e-15));
  CHECK_THROWS_AS(two_point_levy(-1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(two_point_levy(1.0, 1.5), std::invalid_argument);
}

TEST_CASE("history view falls back to x0 before the first node") {
  SyntheticHistory h = constant_history(0.5, std::vector<double>{3.0});
  PathHistoryView v = h.view();
  CHECK(v.time() == 0.5);
  CHECK(v.left_scalar() == 3.0);
  CHECK(v.state_before(0.4)[0] == 3.0);
  CHECK(v.state_before(-0.1)[0] == 3.0);  // pre-history = x0
  CHECK(v.sup_norm_sq() == doctest::Approx(9.0));
}

TEST_CASE("spike history carries the excursion in the sup") {
  SyntheticHistory h = spike_history(0.8, std::vector<double>{2.0}, 3.0);
  PathHistoryView v = h.view();
  const double amp = 3.0 * (2.0 + 1.0);
  CHECK(v.left_scalar() == 2.0);                   // back at the level
  CHECK(v.sup_norm_sq() == doctest::Approx(amp * amp));
  CHECK(v.state_before(0.4)[0] == doctest::Approx(amp));  // the spike node
}

TEST_CASE("validation passes a clean diffusion") {
  ModelSpec spec = diffusion_spec();
  ValidationReport r = validate_model(spec);
  CHECK(r.pass);
  CHECK(r.issues.empty());
  CHECK(r.n_points > 0);
}

TEST_CASE("validation catches non-finite coefficients") {
  ModelSpec spec = diffusion_spec();
  spec.coeffs.sigma = [](double, const PathHistoryView& v,
                         std::span<double> out) {
    out[0] = std::sqrt(v.left_scalar());  // NaN on half of the box
  };
  ValidationReport r = validate_model(spec);
  CHECK(!r.pass);
  CHECK(!r.issues.empty());
}

TEST_CASE("validation catches phi at or below -1") {
  ModelSpec spec = diffusion_spec();
  spec.levy = two_point_levy(1.0, 1.0 / 3.0);
  spec.coeffs.h = [](double, const PathHistoryView&, double mark,
                     std::span<double> out) { out[0] = mark; };
  spec.coeffs.phi = [](double, const PathHistoryView&, double mark) {
    return mark < 0.0 ? -1.5 : 0.5;
  };
  ValidationReport r = validate_model(spec);
  CHECK(!r.pass);
}

TEST_CASE("structural problems throw") {
  ModelSpec spec = diffusion_spec();
  spec.coeffs.a = nullptr;
  CHECK_THROWS_AS(validate_model(spec), std::invalid_argument);

  ModelSpec jumpy = diffusion_spec();
  jumpy.levy = two_point_levy(1.0, 1.0 / 3.0);
  // levy measure without jump coefficients
  CHECK_THROWS_AS(validate_model(jumpy), std::invalid_argument);

  ModelSpec delayed = diffusion_spec();
  delayed.dependence.cls = DependenceClass::delay;
  delayed.dependence.lag = 0.0;  // delay class requires a positive lag
  CHECK_THROWS_AS(validate_model(delayed), std::invalid_argument);

  ModelSpec volterra = diffusion_spec();
  volterra.dependence.cls = DependenceClass::volterra;  // no kernel
  CHECK_THROWS_AS(validate_model(volterra), std::invalid_argument);

  ModelSpec empty = diffusion_spec();
  empty.x0.clear();
  CHECK_THROWS_AS(validate_model(empty), std::invalid_argument);
}

TEST_CASE("levy moment consistency is checked for samplers") {
  ModelSpec spec = diffusion_spec();
  LevyMeasure m;
  m.total_mass = 1.0;
  m.sampler = [](std::mt19937_64& eng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(eng);
  };
  m.second_moment = 50.0;  // wildly wrong: sampled variance is 1
  spec.levy = m;
  spec.coeffs.h = [](double, const PathHistoryView&, double mark,
                     std::span<double> out) { out[0] = mark; };
  spec.coeffs.phi = [](double, const PathHistoryView&, double) { return 0.0; };
  ValidationReport r = validate_model(spec);
  CHECK(!r.pass);

  spec.levy->second_moment = 1.0;  // correct
  ValidationReport ok = validate_model(spec);
  CHECK(ok.pass);
}

TEST_CASE("scalar builders wire the span interface") {
  CoefficientSet c = scalar_markov_coeffs(
      [](double s, double x) { return s + x; },
      [](double, double x) { return 2.0 * x; },
      [](double, double x) { return x * x; },
      [](double, double x, double z) { return x * z; },
      [](double, double x, double z) { return std::abs(x * z); });
  SyntheticHistory h = constant_history(0.25, std::vector<double>{3.0});
  PathHistoryView v = h.view();
  double out = 0.0;
  c.a(0.25, v, std::span<double>(&out, 1));
  CHECK(out == doctest::Approx(3.25));
  c.b(0.25, v, std::span<double>(&out, 1));
  CHECK(out == doctest::Approx(6.0));
  c.sigma(0.25, v, std::span<double>(&out, 1));
  CHECK(out == doctest::Approx(9.0));
  c.h(0.25, v, -0.5, std::span<double>(&out, 1));
  CHECK(out == doctest::Approx(-1.5));
  CHECK(c.phi(0.25, v, -0.5) == doctest::Approx(1.5));
}
