#include "stochexp/measure_change.hpp"

#include <cmath>
#include <stdexcept>

#include "stochexp/rng.hpp"

namespace stochexp {

TiltedModel tilt_model(const ModelSpec& spec, double envelope) {
  if (!(envelope > 0.0))
    throw std::invalid_argument("tilt: envelope must be > 0");
  TiltedModel t;
  t.q_model = spec;
  t.envelope = envelope;
  t.q_model.name = spec.name + ":tilted";
  t.q_model.girsanov_tilted = true;

  const CoefficientSet base = spec.coeffs;
  const std::size_t d = spec.d_state();
  const std::size_t m = spec.d_brownian;
  t.q_model.coeffs.a = [base, d, m](double s, const PathHistoryView& v,
                                    std::span<double> out) {
    thread_local std::vector<double> b, sig;
    b.resize(d * m);
    sig.resize(m);
    base.a(s, v, out);
    base.b(s, v, b);
    base.sigma(s, v, sig);
    for (std::size_t k = 0; k < d; ++k) {
      double acc = out[k];
      for (std::size_t l = 0; l < m; ++l) acc += b[k * m + l] * sig[l];
      out[k] = acc;
    }
  };
  if (spec.levy && spec.levy->total_mass > 0.0)
    t.q_model.jump_tilt = JumpTilt{envelope};
  t.note = "drift a + b sigma^T, P-compensator retained, jump proposals at "
           "rate lambda*envelope thinned by (1+phi)/envelope";
  return t;
}

const char* to_string(PathFunctional f) {
  switch (f) {
    case PathFunctional::terminal_identity:
      return "terminal_identity";
    case PathFunctional::terminal_square:
      return "terminal_square";
    case PathFunctional::indicator:
      return "indicator";
    default:
      return "running_sup";
  }
}

double eval_functional(PathFunctional f, const PathBundle& bundle,
                       std::size_t node, double indicator_threshold) {
  double x = bundle.state(node, 0);
  switch (f) {
    case PathFunctional::terminal_identity:
      return x;
    case PathFunctional::terminal_square:
      return x * x;
    case PathFunctional::indicator:
      return x > indicator_threshold ? 1.0 : 0.0;
    default:
      return bundle.sup_sq[node];
  }
}

namespace {

std::size_t comparison_node(const PathBundle& b) {
  return b.stop_index ? *b.stop_index : b.grid.n_steps;
}

}  // namespace

GirsanovReport girsanov_consistency(const ModelSpec& spec,
                                    const TimeGrid& grid,
                                    const GirsanovConfig& cfg) {
  if (cfg.n_paths == 0)
    throw std::invalid_argument("girsanov: n_paths must be > 0");
  TiltedModel tilt = tilt_model(spec, cfg.envelope);

  const bool localized = cfg.level > 0.0;
  StoppingRule rule;
  rule.level = cfg.level;
  rule.use_running_sup = spec.dependence.cls != DependenceClass::markov;

  const PathFunctional fs[] = {
      PathFunctional::terminal_identity, PathFunctional::terminal_square,
      PathFunctional::indicator, PathFunctional::running_sup};

  GirsanovReport rep;
  rep.level = cfg.level;
  rep.localized = localized;
  rep.indicator_threshold = cfg.indicator_threshold;

  std::vector<SlotAccumulator> pacc(4, SlotAccumulator(cfg.n_paths));
  SlotAccumulator ez(cfg.n_paths);
  EnsembleOptions popts;
  popts.master_seed = cfg.master_seed;
  popts.n_paths = cfg.n_paths;
  popts.n_workers = cfg.n_workers;
  popts.rule = localized ? &rule : nullptr;
  simulate_ensemble(spec, grid, popts,
                    [&](std::size_t p, const PathBundle& b) {
                      std::size_t node = comparison_node(b);
                      double z = std::exp(b.log_z[node]);
                      ez.add(p, z);
                      for (int k = 0; k < 4; ++k)
                        pacc[k].add(p, z * eval_functional(
                                             fs[k], b, node,
                                             cfg.indicator_threshold));
                    });

  std::vector<SlotAccumulator> qacc(4, SlotAccumulator(cfg.n_paths));
  SlotAccumulator qprop(cfg.n_paths), qacpt(cfg.n_paths);
  EnsembleOptions qopts = popts;
  qopts.master_seed = tilted_namespace(cfg.master_seed);
  simulate_ensemble(tilt.q_model, grid, qopts,
                    [&](std::size_t p, const PathBundle& b) {
                      std::size_t node = comparison_node(b);
                      for (int k = 0; k < 4; ++k)
                        qacc[k].add(p, eval_functional(
                                           fs[k], b, node,
                                           cfg.indicator_threshold));
                      qprop.add(p, static_cast<double>(b.proposal_jumps));
                      qacpt.add(p, static_cast<double>(b.accepted_jumps));
                    });

  rep.ez_p = ez.estimate(cfg.master_seed, grid.dt);
  rep.q_proposals = static_cast<std::size_t>(qprop.mean() *
                                             static_cast<double>(cfg.n_paths));
  rep.q_accepted = static_cast<std::size_t>(qacpt.mean() *
                                            static_cast<double>(cfg.n_paths));
  rep.all_overlap = true;
  for (int k = 0; k < 4; ++k) {
    FunctionalComparison c;
    c.name = to_string(fs[k]);
    c.weighted_p = pacc[k].estimate(cfg.master_seed, grid.dt);
    c.plain_q = qacc[k].estimate(qopts.master_seed, grid.dt);
    c.gap_se = gap_in_se(c.weighted_p, c.plain_q);
    c.overlap = c.gap_se <= 3.0;
    rep.all_overlap &= c.overlap;
    rep.functionals.push_back(std::move(c));
  }
  return rep;
}

QvCheck quadratic_variation_check(const ModelSpec& spec, const TimeGrid& grid,
                                  const GirsanovConfig& cfg) {
  if (cfg.n_paths == 0)
    throw std::invalid_argument("qv check: n_paths must be > 0");
  TiltedModel tilt = tilt_model(spec, cfg.envelope);
  const ModelSpec& q = tilt.q_model;
  const std::size_t d = spec.d_state();
  const std::size_t m = spec.d_brownian;

  SlotAccumulator rc(cfg.n_paths), xc(cfg.n_paths), rj(cfg.n_paths),
      xj(cfg.n_paths);

  EnsembleOptions qopts;
  qopts.master_seed = tilted_namespace(cfg.master_seed);
  qopts.n_paths = cfg.n_paths;
  qopts.n_workers = cfg.n_workers;
  simulate_ensemble(q, grid, qopts, [&](std::size_t p, const PathBundle& bd) {
    thread_local std::vector<double> bmat, h;
    bmat.resize(d * m);
    h.resize(d);
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt;
    const double sqdt = std::sqrt(dt);
    double realized = 0.0, expected = 0.0, jreal = 0.0, jexp = 0.0;

    PathHistoryView v;
    v.times = bd.times.data();
    v.states = bd.x.data();
    v.d = d;
    v.x0 = bd.x.data();
    for (std::size_t i = 0; i < n; ++i) {
      v.s = bd.times[i];
      v.count_ = i + 1;
      v.left = &bd.x[i * d];
      v.sup_sq = bd.sup_sq[i];
      q.coeffs.b(v.s, v, bmat);
      for (std::size_t k = 0; k < d; ++k) {
        double move = 0.0, bb = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
          double bkl = bmat[k * m + l];
          move += bkl * bd.driver.gauss[i * m + l] * sqdt;
          bb += bkl * bkl;
        }
        realized += move * move;
        expected += bb * dt;
      }
      if (q.levy && q.levy->total_mass > 0.0) {
        // Q-compensator of the jump QV: int |h|^2 (1+phi) K
        const LevyMeasure& K = *q.levy;
        auto accum = [&](double z, double w) {
          q.coeffs.h(v.s, v, z, h);
          double h2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) h2 += h[k] * h[k];
          double phi = q.coeffs.phi(v.s, v, z);
          jexp += w * h2 * (1.0 + phi) * dt;
        };
        if (!K.atoms.empty()) {
          for (const auto& at : K.atoms) accum(at.mark, K.total_mass * at.prob);
        } else {
          double w = K.total_mass /
                     static_cast<double>(bd.driver.quad_marks.size());
          for (double z : bd.driver.quad_marks) accum(z, w);
        }
      }
    }
    for (const auto& jt : bd.mart.jump_terms) {
      v.s = bd.times[jt.step];
      v.count_ = jt.step + 1;
      v.left = &bd.x[jt.step * d];
      v.sup_sq = bd.sup_sq[jt.step];
      q.coeffs.h(jt.time, v, jt.mark, h);
      double h2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) h2 += h[k] * h[k];
      jreal += h2;
    }
    rc.add(p, realized);
    xc.add(p, expected);
    rj.add(p, jreal);
    xj.add(p, jexp);
  });

  QvCheck chk;
  chk.realized_cont = rc.estimate(qopts.master_seed, grid.dt);
  chk.expected_cont = xc.estimate(qopts.master_seed, grid.dt);
  chk.realized_jump = rj.estimate(qopts.master_seed, grid.dt);
  chk.expected_jump = xj.estimate(qopts.master_seed, grid.dt);
  chk.cont_ok = overlap_3se(chk.realized_cont, chk.expected_cont);
  chk.jump_ok = overlap_3se(chk.realized_jump, chk.expected_jump);
  return chk;
}

}  // namespace stochexp
