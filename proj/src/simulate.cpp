#include "stochexp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

#include "stochexp/rng.hpp"

namespace stochexp {

double PathBundle::z(std::size_t node) const { return std::exp(log_z[node]); }

namespace {

std::size_t step_of(double t, double dt, std::size_t n_steps) {
  // interval (t_k, t_{k+1}] containing t > 0
  double r = t / dt;
  long k = static_cast<long>(std::ceil(r - 1e-12)) - 1;
  if (k < 0) k = 0;
  if (k >= static_cast<long>(n_steps)) k = static_cast<long>(n_steps) - 1;
  return static_cast<std::size_t>(k);
}

void simulate_driver_into(const ModelSpec& spec, const TimeGrid& grid,
                          std::uint64_t master, std::uint64_t path,
                          DriverPath& d) {
  const std::size_t n = grid.n_steps;
  const std::size_t m = spec.d_brownian;
  auto geng = make_engine(master, path, Stream::gauss);
  std::normal_distribution<double> normal(0.0, 1.0);
  d.gauss.resize(n * m);
  for (auto& g : d.gauss) g = normal(geng);
  d.jumps.clear();
  d.quad_marks.clear();
  if (!spec.levy || spec.levy->total_mass <= 0.0) return;

  const LevyMeasure& K = *spec.levy;
  const double envelope = spec.jump_tilt ? spec.jump_tilt->envelope : 1.0;
  auto jeng = make_engine(master, path, Stream::jump);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::poisson_distribution<long> pois(K.total_mass * envelope * grid.horizon);
  long count = pois(jeng);
  d.jumps.resize(static_cast<std::size_t>(count));
  for (auto& j : d.jumps) j.time = grid.horizon * (1.0 - unif(jeng));
  if (!K.atoms.empty()) {
    for (auto& j : d.jumps) {
      double u = unif(jeng), c = 0.0;
      j.mark = K.atoms.back().mark;
      for (const auto& at : K.atoms) {
        c += at.prob;
        if (u < c) {
          j.mark = at.mark;
          break;
        }
      }
    }
  } else {
    for (auto& j : d.jumps) j.mark = K.sampler(jeng);
  }
  std::sort(d.jumps.begin(), d.jumps.end(),
            [](const DriverJump& a, const DriverJump& b) {
              return a.time < b.time;
            });
  for (auto& j : d.jumps) j.step = step_of(j.time, grid.dt, n);
  if (K.atoms.empty()) {
    auto qeng = make_engine(master, path, Stream::quad);
    d.quad_marks.resize(kMarkQuadrature);
    for (auto& z : d.quad_marks) z = K.sampler(qeng);
  }
}

struct Scratch {
  std::vector<double> a, b, sigma, h, hcomp, db;
};

void integrate_into(const ModelSpec& spec, const TimeGrid& grid,
                    const DriverPath& driver, const StoppingRule* rule,
                    std::uint64_t master, std::uint64_t path_index,
                    PathBundle& out, Scratch& ws) {
  const std::size_t n = grid.n_steps;
  const std::size_t d = spec.d_state();
  const std::size_t m = spec.d_brownian;
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);
  const double sig_cap = spec.sigma_cap_per_sqrt_dt / sqdt;

  out.grid = grid;
  out.d_state = d;
  out.times.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.times[i] = grid.time(i);
  out.x.resize((n + 1) * d);
  out.sup_sq.resize(n + 1);
  out.log_z.resize(n + 1);
  out.mart.d_gauss.resize(n);
  out.mart.d_comp.resize(n);
  out.mart.d_qv.resize(n);
  out.mart.jump_terms.clear();
  out.stop_index.reset();
  out.absorb_index.reset();
  out.proposal_jumps = 0;
  out.accepted_jumps = 0;
  out.driver.gauss = driver.gauss;
  out.driver.jumps = driver.jumps;
  out.driver.quad_marks = driver.quad_marks;

  ws.a.resize(d);
  ws.b.resize(d * m);
  ws.sigma.resize(m);
  ws.h.resize(d);
  ws.hcomp.resize(d);

  std::copy(spec.x0.begin(), spec.x0.end(), out.x.begin());
  double sq0 = 0.0;
  for (double v : spec.x0) sq0 += v * v;
  out.sup_sq[0] = sq0;
  out.log_z[0] = 0.0;

  const bool exact = static_cast<bool>(spec.exact_sampler);
  if (exact) {
    ws.db.resize(n);
    spec.exact_sampler(grid, std::span<const double>(driver.gauss.data(), n),
                       std::span<double>(out.x), std::span<double>(ws.db));
  }

  const bool tilted = spec.girsanov_tilted;
  const bool thinning = spec.jump_tilt.has_value();
  const double envelope = thinning ? spec.jump_tilt->envelope : 1.0;
  std::mt19937_64 thin_eng;
  if (thinning) thin_eng = make_engine(master, path_index, Stream::thin);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const bool has_jumps = spec.levy && spec.levy->total_mass > 0.0;
  const LevyMeasure* K = has_jumps ? &*spec.levy : nullptr;
  const double lam = has_jumps ? K->total_mass : 0.0;

  const Dependence& dep = spec.dependence;
  const bool volterra = dep.cls == DependenceClass::volterra;
  const bool separable = volterra && dep.kernel_p && dep.kernel_q;
  double vol_sum = 0.0;  // running sum q(t_k) dB_k for separable kernels

  const bool have_rule = rule != nullptr;
  const double level = have_rule ? rule->level
                                 : std::numeric_limits<double>::infinity();
  const double log_level = std::log(level);
  const bool use_sup = have_rule && rule->use_running_sup;

  PathHistoryView view;
  view.times = out.times.data();
  view.states = out.x.data();
  view.d = d;
  view.x0 = out.x.data();
  view.volterra_y = 0.0;

  auto state_sq = [&](std::size_t node) {
    double s = 0.0;
    const double* p = &out.x[node * d];
    for (std::size_t k = 0; k < d; ++k) s += p[k] * p[k];
    return s;
  };
  auto hit = [&](std::size_t node) {
    if (!have_rule) return false;
    double xs = use_sup ? out.sup_sq[node] : state_sq(node);
    return out.log_z[node] >= log_level || xs >= level;
  };

  bool frozen = false;
  if (hit(0)) {
    out.stop_index = 0;
    frozen = true;
  }

  std::size_t jc = 0;  // cursor into driver.jumps
  for (std::size_t i = 0; i < n; ++i) {
    const double s = out.times[i];
    const double* xl = &out.x[i * d];
    double* xn = &out.x[(i + 1) * d];

    if (frozen) {
      std::copy(xl, xl + d, xn);
      out.sup_sq[i + 1] = out.sup_sq[i];
      out.log_z[i + 1] = out.log_z[i];
      out.mart.d_gauss[i] = 0.0;
      out.mart.d_comp[i] = 0.0;
      out.mart.d_qv[i] = 0.0;
      while (jc < driver.jumps.size() && driver.jumps[jc].step == i) ++jc;
      continue;
    }

    const bool absorbed = out.absorb_index.has_value();
    view.s = s;
    view.count_ = i + 1;
    view.left = xl;
    view.sup_sq = out.sup_sq[i];
    if (volterra) {
      if (separable) {
        view.volterra_y = dep.kernel_p(s) * vol_sum;
      } else {
        double y = 0.0;
        for (std::size_t k = 0; k < i; ++k)
          y += dep.kernel(s, out.times[k]) * driver.gauss[k * m] * sqdt;
        view.volterra_y = y;
      }
    }

    // girsanov load (capped) and its bracket
    spec.coeffs.sigma(s, view, ws.sigma);
    double s2 = 0.0, sdb = 0.0;
    if (exact) {
      double sv = std::clamp(ws.sigma[0], -sig_cap, sig_cap);
      s2 = sv * sv;
      sdb = sv * ws.db[i];
    } else {
      const double* xi = &driver.gauss[i * m];
      for (std::size_t k = 0; k < m; ++k) {
        double sv = std::clamp(ws.sigma[k], -sig_cap, sig_cap);
        s2 += sv * sv;
        sdb += sv * xi[k] * sqdt;
      }
    }

    // jump-measure integrals at the left point
    double phiK = 0.0;
    if (has_jumps) {
      std::fill(ws.hcomp.begin(), ws.hcomp.end(), 0.0);
      if (!K->atoms.empty()) {
        for (const auto& at : K->atoms) {
          double w = lam * at.prob;
          phiK += w * spec.coeffs.phi(s, view, at.mark);
          if (!absorbed && !exact) {
            spec.coeffs.h(s, view, at.mark, ws.h);
            for (std::size_t k = 0; k < d; ++k) ws.hcomp[k] += w * ws.h[k];
          }
        }
      } else {
        double w = lam / static_cast<double>(driver.quad_marks.size());
        for (double zq : driver.quad_marks) {
          phiK += w * spec.coeffs.phi(s, view, zq);
          if (!absorbed && !exact) {
            spec.coeffs.h(s, view, zq, ws.h);
            for (std::size_t k = 0; k < d; ++k) ws.hcomp[k] += w * ws.h[k];
          }
        }
      }
    }

    // state move
    if (!exact) {
      if (!absorbed) {
        spec.coeffs.a(s, view, ws.a);
        spec.coeffs.b(s, view, ws.b);
        const double* xi = &driver.gauss[i * m];
        for (std::size_t k = 0; k < d; ++k) {
          double acc = xl[k] + (ws.a[k] - ws.hcomp[k]) * dt;
          const double* brow = &ws.b[k * m];
          for (std::size_t l = 0; l < m; ++l) acc += brow[l] * xi[l] * sqdt;
          xn[k] = acc;
        }
      } else {
        std::copy(xl, xl + d, xn);
      }
    }

    // exponential increments
    double dq = s2 * dt;
    double dg = sdb + (tilted ? s2 * dt : 0.0);
    double dc = -phiK * dt;
    double lz = out.log_z[i] + dg + dc - 0.5 * dq;

    // jumps in (t_i, t_{i+1}], pre-step history
    while (jc < driver.jumps.size() && driver.jumps[jc].step == i) {
      const DriverJump j = driver.jumps[jc];
      ++jc;
      double phiv = spec.coeffs.phi(j.time, view, j.mark);
      bool accept = true;
      if (thinning) {
        ++out.proposal_jumps;
        double acc = (1.0 + phiv) / envelope;
        if (acc > 1.0 + 1e-12) {
          std::ostringstream msg;
          msg << "tilt envelope " << envelope << " violated at t=" << j.time
              << " (1+phi=" << 1.0 + phiv << "), model " << spec.name;
          throw TiltUnbounded(msg.str());
        }
        if (acc < 1.0 && !(unif(thin_eng) < acc)) continue;
      }
      ++out.accepted_jumps;
      if (phiv <= -1.0) {
        std::ostringstream msg;
        msg << "jump tilt phi <= -1 at t=" << j.time << ", model " << spec.name;
        throw NonFiniteState(msg.str());
      }
      if (!absorbed) {
        spec.coeffs.h(j.time, view, j.mark, ws.h);
        for (std::size_t k = 0; k < d; ++k) xn[k] += ws.h[k];
      }
      lz += std::log1p(phiv);
      out.mart.jump_terms.push_back({i, j.time, phiv, j.mark});
    }

    // absorption clamp-and-freeze (scalar models)
    if (spec.absorb_at_zero && !out.absorb_index && xn[0] <= 0.0) {
      xn[0] = 0.0;
      out.absorb_index = i + 1;
    }

    out.log_z[i + 1] = lz;
    out.mart.d_gauss[i] = dg;
    out.mart.d_comp[i] = dc;
    out.mart.d_qv[i] = dq;
    double sq = state_sq(i + 1);
    out.sup_sq[i + 1] = std::max(out.sup_sq[i], sq);
    if (volterra && separable)
      vol_sum += dep.kernel_q(s) * driver.gauss[i * m] * sqdt;

    bool finite = std::isfinite(lz) && std::isfinite(sq);
    if (finite)
      for (std::size_t k = 0; k < d; ++k)
        if (!std::isfinite(xn[k])) {
          finite = false;
          break;
        }
    if (!finite) {
      if (!have_rule) {
        std::ostringstream msg;
        msg << "non-finite state at t=" << out.times[i + 1] << ", model "
            << spec.name << "; supply a stopping rule or reduce dt";
        throw NonFiniteState(msg.str());
      }
      // one-step overshoot past the level: freeze at the last finite node
      std::copy(xl, xl + d, xn);
      out.sup_sq[i + 1] = out.sup_sq[i];
      out.log_z[i + 1] = out.log_z[i];
      out.mart.d_gauss[i] = 0.0;
      out.mart.d_comp[i] = 0.0;
      out.mart.d_qv[i] = 0.0;
      out.stop_index = i;
      frozen = true;
      continue;
    }
    if (hit(i + 1)) {
      out.stop_index = i + 1;
      frozen = true;
    }
  }
}

}  // namespace

DriverPath simulate_driver(const ModelSpec& spec, const TimeGrid& grid,
                           std::uint64_t master_seed,
                           std::uint64_t path_index) {
  DriverPath d;
  simulate_driver_into(spec, grid, master_seed, path_index, d);
  return d;
}

PathBundle integrate_path(const ModelSpec& spec, const TimeGrid& grid,
                          const DriverPath& driver, const StoppingRule* rule,
                          std::uint64_t master_seed,
                          std::uint64_t path_index) {
  PathBundle b;
  Scratch ws;
  integrate_into(spec, grid, driver, rule, master_seed, path_index, b, ws);
  return b;
}

StopScan scan_stopping(const PathBundle& bundle, const StoppingRule& rule) {
  const double log_level = std::log(rule.level);
  const std::size_t n = bundle.grid.n_steps;
  const std::size_t d = bundle.d_state;
  for (std::size_t i = 0; i <= n; ++i) {
    double xs;
    if (rule.use_running_sup) {
      xs = bundle.sup_sq[i];
    } else {
      xs = 0.0;
      const double* p = &bundle.x[i * d];
      for (std::size_t k = 0; k < d; ++k) xs += p[k] * p[k];
    }
    if (bundle.log_z[i] >= log_level || xs >= rule.level) return {true, i};
  }
  return {false, n};
}

PathBundle apply_stopping(const PathBundle& bundle, const StoppingRule& rule) {
  PathBundle out = bundle;
  StopScan scan = scan_stopping(bundle, rule);
  if (!scan.fired) return out;
  const std::size_t n = bundle.grid.n_steps;
  const std::size_t d = bundle.d_state;
  const std::size_t s = scan.index;
  out.stop_index = s;
  for (std::size_t i = s; i < n; ++i) {
    std::copy(&out.x[s * d], &out.x[s * d] + d, &out.x[(i + 1) * d]);
    out.sup_sq[i + 1] = out.sup_sq[s];
    out.log_z[i + 1] = out.log_z[s];
    out.mart.d_gauss[i] = 0.0;
    out.mart.d_comp[i] = 0.0;
    out.mart.d_qv[i] = 0.0;
  }
  std::erase_if(out.mart.jump_terms,
                [&](const MartingaleIncrements::JumpTerm& j) {
                  return j.step >= s;
                });
  return out;
}

PathHistoryView history_view(const PathBundle& bundle, double s) {
  PathHistoryView v;
  v.d = bundle.d_state;
  v.x0 = bundle.x.data();
  v.times = bundle.times.data();
  v.states = bundle.x.data();
  v.s = s;
  v.volterra_y = 0.0;
  auto it = std::lower_bound(bundle.times.begin(), bundle.times.end(), s);
  std::size_t count = static_cast<std::size_t>(it - bundle.times.begin());
  if (count == 0) {
    v.count_ = 0;
    v.left = bundle.x.data();
    double sq = 0.0;
    for (std::size_t k = 0; k < v.d; ++k)
      sq += bundle.x[k] * bundle.x[k];
    v.sup_sq = sq;
    return v;
  }
  v.count_ = count;
  v.left = &bundle.x[(count - 1) * v.d];
  v.sup_sq = bundle.sup_sq[count - 1];
  return v;
}

void simulate_ensemble(const ModelSpec& spec, const TimeGrid& grid,
                       const EnsembleOptions& opts,
                       const PathConsumer& consumer) {
  if (opts.n_paths == 0) return;
  const std::size_t n_chunks =
      (opts.n_paths + kEnsembleChunk - 1) / kEnsembleChunk;
  unsigned workers = std::max(1u, opts.n_workers);
  if (workers > n_chunks) workers = static_cast<unsigned>(n_chunks);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr err;

  auto work = [&]() {
    Scratch ws;
    DriverPath drv;
    PathBundle bundle;
    try {
      for (;;) {
        if (abort.load(std::memory_order_relaxed)) return;
        std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= n_chunks) return;
        std::size_t lo = c * kEnsembleChunk;
        std::size_t hi = std::min(opts.n_paths, lo + kEnsembleChunk);
        for (std::size_t p = lo; p < hi; ++p) {
          simulate_driver_into(spec, grid, opts.master_seed, p, drv);
          integrate_into(spec, grid, drv, opts.rule, opts.master_seed, p,
                         bundle, ws);
          consumer(p, bundle);
        }
      }
    } catch (...) {
      std::scoped_lock lk(err_mu);
      if (!err) err = std::current_exception();
      abort.store(true, std::memory_order_relaxed);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace stochexp
