// Numerical checks of the linear-growth (Benes-type) conditions that certify
// the true-martingale property of the stochastic exponential.
//
// Everything here is a sampling heuristic: coefficients are probed on a box,
// on escape shells of doubling radius and (optionally) on shrinking radii
// around a singular point, with synthetic constant/spike histories standing
// in for path dependence.  Verdicts are three-valued.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stochexp/model.hpp"
#include "stochexp/simulate.hpp"
#include "stochexp/stats.hpp"

namespace stochexp {

enum class Verdict { pass, fail, inconclusive };
const char* to_string(Verdict v);

struct DomainConfig {
  std::vector<double> lo;             // sampling box; default -8 per dim
  std::vector<double> hi;             // default +8 per dim
  std::vector<double> escape_radii;   // default {8, 16, 32, 64}
  std::vector<double> inner_radii;    // singularity probes, e.g. 1e-1..1e-4
  std::vector<double> singular_point; // default origin
  std::vector<double> time_samples;   // default {0,T/4,T/2,3T/4,(1-1e-6)T}
  std::size_t n_samples = 128;
  std::uint64_t seed = 777;
};

DomainConfig default_domain(const ModelSpec& spec);

// Mark-law quadrature used by the operator evaluators: weights sum to the
// measure's total mass.  Exact atoms when available, sampled cloud otherwise.
struct MarkQuad {
  std::vector<double> marks;
  std::vector<double> weights;
};
MarkQuad make_condition_marks(const ModelSpec& spec, std::uint64_t seed,
                              std::size_t n_draws = 256);

// Operator pair of the dependence class (markov: comparison generator acting
// on |x|^2; path-dependent/delay: the squared-coefficient functional).
double operator_L(const ModelSpec& spec, double s, const PathHistoryView& v,
                  const MarkQuad& mq);
double operator_frakL(const ModelSpec& spec, double s,
                      const PathHistoryView& v, const MarkQuad& mq);
// |sigma|^2 + int phi^2 K, the condition-1 integrand.
double growth_sigma_phi_value(const ModelSpec& spec, double s,
                              const PathHistoryView& v, const MarkQuad& mq);

// f(s, history) -> scalar bound candidate.
using ConditionFn = std::function<double(double, const PathHistoryView&)>;

struct GrowthResult {
  Verdict verdict = Verdict::inconclusive;
  double estimated_r = 0.0;  // max observed f / (1 + normalizer)
  std::vector<double> shell_sup;  // per escape radius
  std::vector<double> inner_sup;  // per inner radius
  std::vector<double> witness;    // state achieving estimated_r
  double witness_time = 0.0;
  std::string note;
};

// Checks f <= r (1 + normalizer) by trend: fail when the normalized shell
// sup grows more than 10% per radius doubling twice in a row, or more than
// 2x per shrinking inner radius twice in a row; pass when shell ratios are
// non-increasing up to 2% slack; inconclusive otherwise.
// use_sup_normalizer: divide by 1 + sup|X|^2 (path-dependent classes)
// instead of 1 + |x|^2.
GrowthResult growth_ratio(const ConditionFn& f, double horizon,
                          std::size_t dim, const DomainConfig& dom,
                          bool use_sup_normalizer);

struct ConditionCheck {
  std::string name;
  Verdict verdict = Verdict::inconclusive;
  double estimated_r = 0.0;
  std::vector<double> witness;
  double witness_time = 0.0;
  std::string note;
};

struct ConditionReport {
  std::string model;
  std::string dependence;
  std::vector<ConditionCheck> checks;
  Verdict overall = Verdict::inconclusive;
  std::string summary;
};

// Assembles the class-appropriate named checks:
//   markov:          benes_BC | growth_sigma_phi, L_bound, frakL_bound
//   path-dep/delay:  benes_BCC | growth_sigma_phi, L_bound, frakL_bound
//   volterra:        benes_BC | growth_sigma_phi, kernel_l2
// (condition 1 is named benes_BC/benes_BCC for pure-diffusion models and
// growth_sigma_phi when a jump part contributes).
ConditionReport benes_verdict(const ModelSpec& spec, const DomainConfig& dom);
ConditionReport benes_verdict(const ModelSpec& spec);

// Radial-drift heuristic for finite-time explosion: log-log slope of the
// outward drift component across escape shells; superlinear growth flags the
// model as explosion-suspect (integration should then be stopped).
struct ExplosionProbe {
  bool suspect = false;
  double exponent_estimate = 0.0;
  std::string note;
};
ExplosionProbe explosion_probe(const ModelSpec& spec, const DomainConfig& dom);

// Exponential-moment certificates.  Estimates are plain sample means; the
// diverging flag is raised when the shell-truncated means E[W ^ L] still grow
// by more than 2% at each of the last doublings of L, i.e. the truncated
// means never stabilize and the moment is numerically infinite.
struct ExpMomentReport {
  MCEstimate estimate;
  bool diverging = false;
  // means of W ^ L over doubling truncation shells L; they stabilize at E W
  // when that is finite and keep climbing when it is not
  std::vector<double> shell_means;
  double checkpoint_time = 0.0;  // kazamaki: arg-sup checkpoint
  std::string note;
};

// E exp(1/2 <M^c>_T)
ExpMomentReport novikov_estimate(const ModelSpec& spec, const TimeGrid& grid,
                                 const EnsembleOptions& opts);
// sup_t E exp(1/2 M^c_t) over checkpoint nodes
ExpMomentReport kazamaki_estimate(const ModelSpec& spec, const TimeGrid& grid,
                                  const EnsembleOptions& opts,
                                  std::size_t n_checkpoints = 10);

}  // namespace stochexp
