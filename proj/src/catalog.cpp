#include "stochexp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace stochexp {

namespace {

constexpr double kDriftGuard = 1e-6;

ModelSpec base_spec(std::string name, double x0, double horizon) {
  ModelSpec spec;
  spec.name = std::move(name);
  spec.x0 = {x0};
  spec.horizon = horizon;
  return spec;
}

CatalogEntry make_bm_quadratic() {
  CatalogEntry e;
  e.spec = base_spec("bm_quadratic", 0.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [](double, double x) { return 2.0 * x; });
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "driftless brownian motion with quadratic exponent load sigma = 2x; "
      "heavy-tailed z_T with unit mean";
  return e;
}

CatalogEntry make_pure_jump_iid() {
  CatalogEntry e;
  e.spec = base_spec("pure_jump_iid", 0.0, 1.0);
  const double c = 0.5;  // constant jump tilt
  e.spec.coeffs.a = [](double, const PathHistoryView&, std::span<double> out) {
    out[0] = 0.0;
  };
  e.spec.coeffs.b = [](double, const PathHistoryView&, std::span<double> out) {
    out[0] = 0.0;
  };
  e.spec.coeffs.sigma = [](double, const PathHistoryView&,
                           std::span<double> out) { out[0] = 0.0; };
  e.spec.coeffs.h = [](double, const PathHistoryView&, double mark,
                       std::span<double> out) { out[0] = mark; };
  e.spec.coeffs.phi = [c](double, const PathHistoryView&, double) {
    return c;
  };
  e.spec.levy = two_point_levy(1.0, 1.0 / 3.0);
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"growth_sigma_phi", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.girsanov_envelope = 1.0 + c;
  e.description =
      "compensated compound poisson with iid two-point marks and constant "
      "intensity tilt phi = 0.5";
  return e;
}

CatalogEntry make_cev() {
  CatalogEntry e;
  e.spec = base_spec("cev", 1.0, 0.5);
  auto root = [](double x) { return std::sqrt(std::max(x, 0.0)); };
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return x; },
      [root](double, double x) { return root(x); },
      [root](double, double x) { return root(x); });
  e.spec.absorb_at_zero = true;
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "square-root diffusion dX = X dt + sqrt(X+) dB absorbed at zero, "
      "exponent load sigma = sqrt(X+)";
  return e;
}

CatalogEntry make_cubic_drift() {
  CatalogEntry e;
  e.spec = base_spec("cubic_drift", 1.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return -x * x * x; },
      [](double, double x) { return x; }, [](double, double x) { return x; });
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "strongly mean-reverting cubic drift with linear diffusion and linear "
      "exponent load";
  return e;
}

CatalogEntry make_brownian_bridge() {
  CatalogEntry e;
  e.spec = base_spec("brownian_bridge", 0.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double s, double x) { return -x / std::max(1.0 - s, 1e-9); },
      [](double, double) { return 1.0; }, [](double, double x) { return x; });
  // exact transition sampling X_{i+1} = X_i r + sqrt(dt r) xi with
  // r = (1 - t_{i+1}) / (1 - t_i); the driving increments are recovered
  // from dB = dX + X dt / (1 - t).
  e.spec.exact_sampler = [](const TimeGrid& grid, std::span<const double> xi,
                            std::span<double> x, std::span<double> db) {
    x[0] = 0.0;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
      const double t0 = grid.time(i);
      const double t1 = grid.time(i + 1);
      const double r = (1.0 - t1) / (1.0 - t0);
      x[i + 1] = x[i] * r + std::sqrt(grid.dt * r) * xi[i];
      db[i] = (x[i + 1] - x[i]) + x[i] * grid.dt / std::max(1.0 - t0, 1e-6);
    }
  };
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "brownian bridge pinned at zero, sampled by exact transitions, with "
      "exponent load sigma = x";
  return e;
}

CatalogEntry make_mijatovic_urusov() {
  CatalogEntry e;
  e.spec = base_spec("mijatovic_urusov", 1.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return 1.0 / std::max(x, kDriftGuard); },
      [](double, double) { return 1.0; }, [](double, double x) { return x; });
  e.domain = default_domain(e.spec);
  e.domain.lo = {0.05};
  e.domain.hi = {8.0};
  e.domain.inner_radii = {1e-1, 1e-2, 1e-3, 1e-4};
  e.domain.singular_point = {0.0};
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "repelling 1/x drift with unit diffusion and linear exponent load; the "
      "generator bounds cancel the singularity";
  return e;
}

CatalogEntry make_explosive_markov() {
  CatalogEntry e;
  e.spec = base_spec("explosive_markov", 1.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return std::pow(std::abs(x), 3.5); },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
  e.spec.coeffs.h = [](double, const PathHistoryView&, double mark,
                       std::span<double> out) { out[0] = mark; };
  e.spec.coeffs.phi = [](double, const PathHistoryView&, double mark) {
    return std::abs(mark);
  };
  e.spec.levy = two_point_levy(1.0, 1.0 / 3.0);
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"growth_sigma_phi", Verdict::pass},
                       {"L_bound", Verdict::fail},
                       {"frakL_bound", Verdict::fail}};
  e.expected_overall = Verdict::fail;
  e.explosion_suspect = true;
  e.girsanov_envelope = 2.0;
  e.description =
      "superlinear drift |x|^3.5 with jumps; explodes in finite time and must "
      "be run under a stopping rule";
  return e;
}

CatalogEntry make_bessel_counterexample() {
  CatalogEntry e;
  e.spec = base_spec("bessel_counterexample", 1.0, 1.0);
  e.spec.coeffs = scalar_markov_coeffs(
      [](double, double x) { return 1.0 / std::max(x, kDriftGuard); },
      [](double, double) { return 1.0; },
      [](double, double x) { return -1.0 / std::max(x, kDriftGuard); });
  // no sigma cap: at the guard scale the -sigma^2 dt / 2 term must kill z
  // outright (that is the mass the strict local martingale sheds); capped
  // crash factors would survive and freeze at large z, biasing E z upward.
  e.domain = default_domain(e.spec);
  e.domain.lo = {0.05};
  e.domain.hi = {8.0};
  e.domain.inner_radii = {1e-1, 1e-2, 1e-3, 1e-4};
  e.domain.singular_point = {0.0};
  e.expected_checks = {{"benes_BC", Verdict::fail},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.expected_overall = Verdict::fail;
  e.expected_ez = 0.6826894921370859;  // 2 Phi(1) - 1
  e.description =
      "bessel(3) exponent load sigma = -1/x: the generator bounds hold but "
      "the linear growth condition fails and E z_1 = 2 Phi(1) - 1";
  return e;
}

CatalogEntry make_two_driver() {
  CatalogEntry e;
  e.spec = base_spec("two_driver", 0.0, 1.0);
  e.spec.d_brownian = 2;
  e.spec.coeffs.a = [](double, const PathHistoryView& v,
                       std::span<double> out) { out[0] = -v.left_scalar(); };
  e.spec.coeffs.b = [](double, const PathHistoryView&, std::span<double> out) {
    out[0] = 1.0;
    out[1] = 0.0;
  };
  e.spec.coeffs.sigma = [](double, const PathHistoryView& v,
                           std::span<double> out) {
    out[0] = v.left_scalar();
    out[1] = 1.0;
  };
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "ornstein-uhlenbeck driven by the first of two brownian motions; the "
      "tilt b sigma^T = x removes the mean reversion";
  return e;
}

CatalogEntry make_hitsuda_volterra() {
  CatalogEntry e;
  e.spec = base_spec("hitsuda_volterra", 0.0, 1.0);
  e.spec.coeffs = scalar_pathdep_coeffs(
      [](double, const PathHistoryView& v) { return v.volterra_y; },
      [](double, const PathHistoryView&) { return 1.0; },
      [](double, const PathHistoryView& v) {
        const double x = v.left_scalar();
        return std::sqrt(1.0 + x * x) * std::tanh(x);
      });
  e.spec.dependence.cls = DependenceClass::volterra;
  e.spec.dependence.kernel = [](double s, double u) {
    return std::exp(-(s - u));
  };
  e.spec.dependence.kernel_p = [](double s) { return std::exp(-s); };
  e.spec.dependence.kernel_q = [](double u) { return std::exp(u); };
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BC", Verdict::pass},
                       {"kernel_l2", Verdict::pass}};
  e.description =
      "volterra drift driven by an exponential kernel average of the noise, "
      "with a bounded-by-linear exponent load";
  return e;
}

CatalogEntry make_delay_sde() {
  CatalogEntry e;
  e.spec = base_spec("delay_sde", 1.0, 1.0);
  const double lag = 0.25;
  auto lagged = [lag](double s, const PathHistoryView& v) {
    return v.state_before(s - lag)[0];
  };
  e.spec.coeffs = scalar_pathdep_coeffs(
      [lagged](double s, const PathHistoryView& v) {
        return 0.5 * std::tanh(lagged(s, v));
      },
      [lagged](double s, const PathHistoryView& v) {
        return 0.8 + 0.2 * std::tanh(lagged(s, v));
      },
      [lagged](double s, const PathHistoryView& v) {
        return 0.5 * std::tanh(lagged(s, v));
      });
  e.spec.dependence.cls = DependenceClass::delay;
  e.spec.dependence.lag = lag;
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BCC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "delay equation with bounded lagged coefficients and a bounded exponent "
      "load evaluated at the lagged state";
  return e;
}

CatalogEntry make_weak_existence() {
  CatalogEntry e;
  e.spec = base_spec("weak_existence_unit_diffusion", 0.0, 1.0);
  e.spec.coeffs = scalar_pathdep_coeffs(
      [](double, const PathHistoryView&) { return 0.0; },
      [](double, const PathHistoryView&) { return 1.0; },
      [](double, const PathHistoryView& v) {
        return 0.5 * std::sqrt(1.0 + v.sup_norm_sq());
      });
  e.spec.dependence.cls = DependenceClass::path_dependent;
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BCC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "unit diffusion whose exponent load depends on the running supremum; "
      "the tilted law is constructed by change of measure alone";
  return e;
}

CatalogEntry make_singular_diffusion() {
  CatalogEntry e;
  e.spec = base_spec("singular_diffusion", 1.0, 1.0);
  e.spec.coeffs = scalar_pathdep_coeffs(
      [](double, const PathHistoryView&) { return 0.0; },
      [](double, const PathHistoryView& v) { return v.left_scalar(); },
      [](double, const PathHistoryView& v) {
        return v.left_scalar() != 0.0 ? 0.5 : 0.0;
      });
  e.spec.dependence.cls = DependenceClass::path_dependent;
  e.domain = default_domain(e.spec);
  e.expected_checks = {{"benes_BCC", Verdict::pass},
                       {"L_bound", Verdict::pass},
                       {"frakL_bound", Verdict::pass}};
  e.description =
      "driftless geometric brownian motion with an exponent load that "
      "switches off on the null set x = 0";
  return e;
}

std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> entries;
  entries.push_back(make_bm_quadratic());
  entries.push_back(make_pure_jump_iid());
  entries.push_back(make_cev());
  entries.push_back(make_cubic_drift());
  entries.push_back(make_brownian_bridge());
  entries.push_back(make_mijatovic_urusov());
  entries.push_back(make_explosive_markov());
  entries.push_back(make_bessel_counterexample());
  entries.push_back(make_two_driver());
  entries.push_back(make_hitsuda_volterra());
  entries.push_back(make_delay_sde());
  entries.push_back(make_weak_existence());
  entries.push_back(make_singular_diffusion());
  return entries;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = build_catalog();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const CatalogEntry& e : catalog()) {
    if (e.spec.name == name) return e;
  }
  throw std::invalid_argument("unknown catalog model: " + name);
}

std::vector<std::string> catalog_names() {
  std::vector<std::string> names;
  for (const CatalogEntry& e : catalog()) names.push_back(e.spec.name);
  return names;
}

bool use_running_sup(const ModelSpec& spec) {
  return spec.dependence.cls != DependenceClass::markov;
}

}  // namespace stochexp
