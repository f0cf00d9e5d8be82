#include "stochexp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stochexp {
namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::span<const double> PathHistoryView::state_before(double t) const {
  if (count_ == 0 || t < times[0]) return {x0, d};
  const double* end = times + count_;
  auto it = std::upper_bound(times, end, t);
  std::size_t idx = static_cast<std::size_t>(it - times) - 1;
  return {states + idx * d, d};
}

PathHistoryView SyntheticHistory::view() const {
  PathHistoryView v;
  v.s = s;
  v.times = times.data();
  v.states = states.data();
  v.count_ = times.size();
  v.d = x0v.size();
  v.left = states.data() + (times.size() - 1) * x0v.size();
  v.sup_sq = sup_sq;
  v.x0 = x0v.data();
  v.volterra_y = volterra_y;
  return v;
}

SyntheticHistory constant_history(double s, std::span<const double> x) {
  SyntheticHistory h;
  h.x0v.assign(x.begin(), x.end());
  h.s = s;
  if (s > 0.0) {
    h.times = {0.0, s};
    h.states.insert(h.states.end(), x.begin(), x.end());
    h.states.insert(h.states.end(), x.begin(), x.end());
  } else {
    h.times = {0.0};
    h.states.assign(x.begin(), x.end());
  }
  double n = norm(x);
  h.sup_sq = n * n;
  return h;
}

SyntheticHistory spike_history(double s, std::span<const double> x,
                               double scale) {
  if (!(s > 0.0)) return constant_history(s, x);
  SyntheticHistory h;
  h.x0v.assign(x.begin(), x.end());
  h.s = s;
  double n = norm(x);
  double amp = scale * (n + 1.0);
  std::vector<double> spike(x.size(), 0.0);
  if (n > 0.0)
    for (std::size_t k = 0; k < x.size(); ++k) spike[k] = x[k] / n * amp;
  else
    spike[0] = amp;
  h.times = {0.0, 0.5 * s, s};
  h.states.insert(h.states.end(), x.begin(), x.end());
  h.states.insert(h.states.end(), spike.begin(), spike.end());
  h.states.insert(h.states.end(), x.begin(), x.end());
  h.sup_sq = std::max(n * n, amp * amp);
  h.volterra_y = amp;
  return h;
}

LevyMeasure two_point_levy(double lambda, double p_up) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("levy: lambda must be >= 0");
  if (!(p_up > 0.0 && p_up < 1.0))
    throw std::invalid_argument("levy: p_up must be in (0,1)");
  LevyMeasure m;
  m.total_mass = lambda;
  m.atoms = {{1.0, p_up}, {-0.5, 1.0 - p_up}};
  m.second_moment = lambda * (p_up * 1.0 + (1.0 - p_up) * 0.25);
  m.third_abs_moment = lambda * (p_up * 1.0 + (1.0 - p_up) * 0.125);
  return m;
}

CoefficientSet scalar_markov_coeffs(
    std::function<double(double, double)> a,
    std::function<double(double, double)> b,
    std::function<double(double, double)> sigma,
    std::function<double(double, double, double)> h,
    std::function<double(double, double, double)> phi) {
  CoefficientSet c;
  c.a = [f = std::move(a)](double s, const PathHistoryView& v,
                           std::span<double> out) {
    out[0] = f(s, v.left_scalar());
  };
  c.b = [f = std::move(b)](double s, const PathHistoryView& v,
                           std::span<double> out) {
    out[0] = f(s, v.left_scalar());
  };
  c.sigma = [f = std::move(sigma)](double s, const PathHistoryView& v,
                                   std::span<double> out) {
    out[0] = f(s, v.left_scalar());
  };
  if (h)
    c.h = [f = std::move(h)](double s, const PathHistoryView& v, double z,
                             std::span<double> out) {
      out[0] = f(s, v.left_scalar(), z);
    };
  if (phi)
    c.phi = [f = std::move(phi)](double s, const PathHistoryView& v,
                                 double z) { return f(s, v.left_scalar(), z); };
  return c;
}

CoefficientSet scalar_pathdep_coeffs(
    std::function<double(double, const PathHistoryView&)> a,
    std::function<double(double, const PathHistoryView&)> b,
    std::function<double(double, const PathHistoryView&)> sigma,
    std::function<double(double, const PathHistoryView&, double)> h,
    std::function<double(double, const PathHistoryView&, double)> phi) {
  CoefficientSet c;
  c.a = [f = std::move(a)](double s, const PathHistoryView& v,
                           std::span<double> out) { out[0] = f(s, v); };
  c.b = [f = std::move(b)](double s, const PathHistoryView& v,
                           std::span<double> out) { out[0] = f(s, v); };
  c.sigma = [f = std::move(sigma)](double s, const PathHistoryView& v,
                                   std::span<double> out) { out[0] = f(s, v); };
  if (h)
    c.h = [f = std::move(h)](double s, const PathHistoryView& v, double z,
                             std::span<double> out) { out[0] = f(s, v, z); };
  if (phi)
    c.phi = std::move(phi);
  return c;
}

namespace {

void check_structure(const ModelSpec& spec) {
  if (spec.x0.empty()) throw std::invalid_argument("model: x0 is empty");
  if (!all_finite(spec.x0)) throw std::invalid_argument("model: x0 not finite");
  if (!(spec.horizon > 0.0))
    throw std::invalid_argument("model: horizon must be > 0");
  if (spec.d_brownian == 0)
    throw std::invalid_argument("model: d_brownian must be >= 1");
  if (!spec.coeffs.a || !spec.coeffs.b || !spec.coeffs.sigma)
    throw std::invalid_argument("model: a, b, sigma callbacks required");
  if (spec.levy) {
    const auto& K = *spec.levy;
    if (!(K.total_mass >= 0.0))
      throw std::invalid_argument("model: levy total mass must be >= 0");
    if (!spec.coeffs.h || !spec.coeffs.phi)
      throw std::invalid_argument("model: jump measure requires h and phi");
    if (K.total_mass > 0.0 && K.atoms.empty() && !K.sampler)
      throw std::invalid_argument("model: levy needs atoms or a sampler");
    if (!K.atoms.empty()) {
      double psum = 0.0;
      for (const auto& at : K.atoms) {
        if (!(at.prob > 0.0))
          throw std::invalid_argument("model: atom probabilities must be > 0");
        psum += at.prob;
      }
      if (std::abs(psum - 1.0) > 1e-9)
        throw std::invalid_argument("model: atom probabilities must sum to 1");
    }
    if (!(K.second_moment >= 0.0))
      throw std::invalid_argument("model: levy second moment must be >= 0");
  } else if (spec.coeffs.h || spec.coeffs.phi) {
    throw std::invalid_argument("model: jump coefficients without a measure");
  }
  if (spec.jump_tilt) {
    if (!spec.levy)
      throw std::invalid_argument("model: jump tilt without a measure");
    if (!(spec.jump_tilt->envelope > 0.0))
      throw std::invalid_argument("model: tilt envelope must be > 0");
  }
  switch (spec.dependence.cls) {
    case DependenceClass::delay:
      if (!(spec.dependence.lag > 0.0))
        throw std::invalid_argument("model: delay class needs lag > 0");
      break;
    case DependenceClass::volterra:
      if (!spec.dependence.kernel &&
          !(spec.dependence.kernel_p && spec.dependence.kernel_q))
        throw std::invalid_argument("model: volterra class needs a kernel");
      break;
    default:
      break;
  }
  if (spec.exact_sampler) {
    if (spec.d_state() != 1 || spec.levy ||
        spec.dependence.cls != DependenceClass::markov)
      throw std::invalid_argument(
          "model: exact sampler supported for scalar markov diffusions only");
  }
  if (spec.absorb_at_zero && spec.d_state() != 1)
    throw std::invalid_argument("model: absorb_at_zero is scalar-only");
  if (!(spec.sigma_cap_per_sqrt_dt > 0.0))
    throw std::invalid_argument("model: sigma cap must be > 0");
}

struct IssueSink {
  ValidationReport& rep;
  std::size_t cap;
  void add(std::string what, double t, std::span<const double> x,
           double mark = 0.0) {
    rep.pass = false;
    if (rep.issues.size() >= cap) return;
    ValidationIssue is;
    is.what = std::move(what);
    is.time = t;
    is.state.assign(x.begin(), x.end());
    is.mark = mark;
    rep.issues.push_back(std::move(is));
  }
};

}  // namespace

ValidationReport validate_model(const ModelSpec& spec,
                                const ValidationConfig& cfg) {
  check_structure(spec);
  const std::size_t d = spec.d_state();
  const std::size_t m = spec.d_brownian;

  std::vector<double> lo = cfg.box_lo, hi = cfg.box_hi;
  if (lo.empty()) lo.assign(d, -8.0);
  if (hi.empty()) hi.assign(d, 8.0);
  if (lo.size() != d || hi.size() != d)
    throw std::invalid_argument("validate: box dimensions do not match model");
  for (std::size_t k = 0; k < d; ++k)
    if (!(lo[k] < hi[k]))
      throw std::invalid_argument("validate: box_lo must be < box_hi");

  std::vector<double> times = cfg.time_samples;
  if (times.empty()) {
    double T = spec.horizon;
    times = {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T * (1.0 - 1e-6)};
  }

  ValidationReport rep;
  IssueSink sink{rep, cfg.max_issues};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Mark set used to probe h and phi.
  std::vector<double> marks;
  if (spec.levy && spec.levy->total_mass > 0.0) {
    if (!spec.levy->atoms.empty()) {
      for (const auto& at : spec.levy->atoms) marks.push_back(at.mark);
    } else {
      for (int k = 0; k < 16; ++k) marks.push_back(spec.levy->sampler(rng));
    }
  }

  std::vector<double> x(d), av(d), bv(d * m), sv(m), hv(d);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    for (std::size_t k = 0; k < d; ++k)
      x[k] = lo[k] + (hi[k] - lo[k]) * unif(rng);
    for (double t : times) {
      for (int which = 0; which < 2; ++which) {
        SyntheticHistory hist = which == 0 ? constant_history(t, x)
                                           : spike_history(t, x, 2.0);
        PathHistoryView v = hist.view();
        spec.coeffs.a(t, v, av);
        if (!all_finite(av)) sink.add("drift a not finite", t, x);
        spec.coeffs.b(t, v, bv);
        if (!all_finite(bv)) sink.add("diffusion b not finite", t, x);
        spec.coeffs.sigma(t, v, sv);
        if (!all_finite(sv)) sink.add("girsanov load sigma not finite", t, x);
        for (double z : marks) {
          spec.coeffs.h(t, v, z, hv);
          if (!all_finite(hv)) sink.add("jump coefficient h not finite", t, x, z);
          double p = spec.coeffs.phi(t, v, z);
          if (!std::isfinite(p)) sink.add("jump tilt phi not finite", t, x, z);
          else if (p <= -1.0) sink.add("jump tilt phi at or below -1", t, x, z);
        }
        ++rep.n_points;
      }
    }
  }

  // Moment consistency of the mark measure.
  if (spec.levy && spec.levy->total_mass > 0.0) {
    const auto& K = *spec.levy;
    if (!K.atoms.empty()) {
      double m2 = 0.0, m3 = 0.0;
      for (const auto& at : K.atoms) {
        m2 += at.prob * at.mark * at.mark;
        m3 += at.prob * std::abs(at.mark * at.mark * at.mark);
      }
      m2 *= K.total_mass;
      m3 *= K.total_mass;
      if (std::abs(m2 - K.second_moment) > 1e-9 * std::max(1.0, std::abs(m2)))
        sink.add("levy second_moment inconsistent with atoms", 0.0, x);
      if (K.third_abs_moment &&
          std::abs(m3 - *K.third_abs_moment) > 1e-9 * std::max(1.0, m3))
        sink.add("levy third_abs_moment inconsistent with atoms", 0.0, x);
    } else {
      const std::size_t n = 4096;
      double s2 = 0.0, s4 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double z = K.sampler(rng);
        if (!std::isfinite(z)) {
          sink.add("levy sampler produced non-finite mark", 0.0, x);
          break;
        }
        s2 += z * z;
        s4 += z * z * z * z;
      }
      double mean = s2 / n;
      double var = std::max(0.0, s4 / n - mean * mean);
      double se = std::sqrt(var / n) * K.total_mass;
      double est = mean * K.total_mass;
      if (std::abs(est - K.second_moment) > 6.0 * se + 1e-12)
        sink.add("levy second_moment inconsistent with sampler", 0.0, x);
    }
  }

  // Volterra kernel: finiteness and square-integrability on the triangle.
  if (spec.dependence.cls == DependenceClass::volterra) {
    const auto& dep = spec.dependence;
    auto l = [&](double s, double u) {
      if (dep.kernel) return dep.kernel(s, u);
      return dep.kernel_p(s) * dep.kernel_q(u);
    };
    const int q = 64;
    double T = spec.horizon, acc = 0.0;
    bool finite = true;
    for (int is = 0; is < q && finite; ++is) {
      double s = (is + 0.5) * T / q;
      for (int iu = 0; iu < q; ++iu) {
        double u = (iu + 0.5) * T / q;
        if (u >= s) break;
        double val = l(s, u);
        if (!std::isfinite(val)) {
          sink.add("volterra kernel not finite", s, x, u);
          finite = false;
          break;
        }
        acc += val * val * (T / q) * (T / q);
      }
    }
    if (finite && !std::isfinite(acc))
      sink.add("volterra kernel not square-integrable", 0.0, x);
    if (dep.kernel && dep.kernel_p && dep.kernel_q) {
      double s = 0.75 * spec.horizon, u = 0.25 * spec.horizon;
      double gap = std::abs(dep.kernel(s, u) - dep.kernel_p(s) * dep.kernel_q(u));
      if (gap > 1e-9 * std::max(1.0, std::abs(dep.kernel(s, u))))
        sink.add("volterra separable factors disagree with kernel", s, x, u);
    }
  }

  return rep;
}

}  // namespace stochexp
