// Model core: path-history views, coefficient callbacks, jump measures and
// the ModelSpec aggregate consumed by the simulator.
//
// Conventions:
//   state dimension d = x0.size(), brownian dimension m = d_brownian;
//   a : drift, out size d            b : diffusion, out size d*m (row-major)
//   sigma : girsanov load, out size m
//   h : jump coefficient (per mark), out size d
//   phi : jump tilt (per mark), scalar > -1
// All coefficients are evaluated at the left point: time s plus the history
// up to and including s (caglad reading of the integrands).
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stochexp {

struct TimeGrid;

// Non-owning window onto a path up to time s.  `states` is row-major
// (count x d).  Queries before the first node fall back to x0 (constant
// pre-history, as used by delay models).
struct PathHistoryView {
  double s = 0.0;
  const double* times = nullptr;
  const double* states = nullptr;
  std::size_t count_ = 0;
  std::size_t d = 1;
  const double* left = nullptr;  // state at the left point of the current step
  double sup_sq = 0.0;           // sup_{u<=s} |X_u|^2
  const double* x0 = nullptr;
  double volterra_y = 0.0;       // int_0^s l(s,u) dB_u when the model uses it

  double time() const { return s; }
  std::size_t count() const { return count_; }
  std::size_t dim() const { return d; }
  std::span<const double> left_limit() const { return {left, d}; }
  double left_scalar() const { return left[0]; }
  double sup_norm_sq() const { return sup_sq; }

  // State at the last recorded node with time <= t; t below the first node
  // (or empty history) returns x0.
  std::span<const double> state_before(double t) const;
};

using DriftFn =
    std::function<void(double, const PathHistoryView&, std::span<double>)>;
using DiffusionFn =
    std::function<void(double, const PathHistoryView&, std::span<double>)>;
using GirsanovLoadFn =
    std::function<void(double, const PathHistoryView&, std::span<double>)>;
using JumpCoefFn = std::function<void(double, const PathHistoryView&, double,
                                      std::span<double>)>;
using JumpTiltFn =
    std::function<double(double, const PathHistoryView&, double)>;

struct CoefficientSet {
  DriftFn a;
  DiffusionFn b;
  GirsanovLoadFn sigma;
  JumpCoefFn h;    // present iff the model jumps
  JumpTiltFn phi;  // present iff the model jumps
};

// Finite-activity mark measure K with total mass lambda.  Either an explicit
// atom list (exact mark-law integrals) or a sampler (integrals then use a
// per-path quadrature cloud of draws).
struct MarkAtom {
  double mark = 0.0;
  double prob = 0.0;
};

struct LevyMeasure {
  double total_mass = 0.0;                           // lambda = K(R)
  std::vector<MarkAtom> atoms;                       // exact law, may be empty
  std::function<double(std::mt19937_64&)> sampler;   // required iff atoms empty
  double second_moment = 0.0;                        // int z^2 K(dz)
  std::optional<double> third_abs_moment;            // int |z|^3 K(dz)
};

// Two-point law {+1 w.p. p_up, -1/2 w.p. 1-p_up} scaled to total mass lambda.
// p_up = 1/3 makes int z K(dz) vanish exactly.
LevyMeasure two_point_levy(double lambda, double p_up);

enum class DependenceClass { markov, path_dependent, delay, volterra };

struct Dependence {
  DependenceClass cls = DependenceClass::markov;
  double lag = 0.0;                                  // delay class
  std::function<double(double, double)> kernel;      // volterra l(s,u)
  std::function<double(double)> kernel_p;            // optional separable form
  std::function<double(double)> kernel_q;            //   l(s,u) = p(s) q(u)
};

// Replaces the generic Euler update when an exact scheme exists (scalar,
// continuous models only).  Receives the driver's n standard normals, fills
// all n+1 state nodes plus the n brownian increments dB that reproduce the
// path through the model's own dynamics (driver reconstruction).
using ExactSamplerFn =
    std::function<void(const TimeGrid&, std::span<const double>,
                       std::span<double>, std::span<double>)>;

// Present on measure-changed models: jump proposals arrive at rate
// lambda * envelope and are accepted with probability (1 + phi) / envelope.
struct JumpTilt {
  double envelope = 1.0;
};

struct ModelSpec {
  std::string name;
  std::vector<double> x0;
  std::size_t d_brownian = 1;
  double horizon = 1.0;
  CoefficientSet coeffs;
  std::optional<LevyMeasure> levy;
  Dependence dependence;
  bool absorb_at_zero = false;  // scalar: clamp at 0 and freeze on touch
  // Cap |sigma| at cap/sqrt(dt) (applied by the integrator, which knows dt);
  // keeps per-step gaussian log-z increments within grid resolution for
  // models whose load blows up on excursions the grid cannot represent.
  double sigma_cap_per_sqrt_dt = std::numeric_limits<double>::infinity();
  // Set on measure-changed models: the driver brownian is the Q-side B~, so
  // the exponential's increments are rebased via dB = dB~ + sigma^T dt.
  bool girsanov_tilted = false;
  std::optional<JumpTilt> jump_tilt;
  ExactSamplerFn exact_sampler;

  std::size_t d_state() const { return x0.size(); }
  bool has_jumps() const { return levy.has_value(); }
};

// Owning synthetic history for validation and condition probing.
struct SyntheticHistory {
  std::vector<double> times;
  std::vector<double> states;  // row-major
  std::vector<double> x0v;
  double s = 0.0;
  double sup_sq = 0.0;
  double volterra_y = 0.0;

  PathHistoryView view() const;
};

// History sitting at the constant level x on [0, s].
SyntheticHistory constant_history(double s, std::span<const double> x);
// Same, but with an excursion to scale*(|x|+1) at time s/2; exercises
// running-sup and lagged lookups away from the current state.
SyntheticHistory spike_history(double s, std::span<const double> x,
                               double scale);

struct ValidationIssue {
  std::string what;
  double time = 0.0;
  std::vector<double> state;
  double mark = 0.0;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationIssue> issues;
  std::size_t n_points = 0;
};

struct ValidationConfig {
  std::vector<double> box_lo;  // default -8 per dimension
  std::vector<double> box_hi;  // default +8 per dimension
  std::size_t n_samples = 256;
  std::uint64_t seed = 12345;
  std::vector<double> time_samples;  // default {0, T/4, T/2, 3T/4, ~T}
  std::size_t max_issues = 32;
};

// Structural problems (missing callbacks, bad measure, bad dependence data)
// throw std::invalid_argument.  Numeric behaviour over the sample box
// (non-finite values, phi <= -1) is collected into the report.
ValidationReport validate_model(const ModelSpec& spec,
                                const ValidationConfig& cfg = {});

// Scalar convenience builders -------------------------------------------------

// Markov coefficients f(s, x); h/phi take (s, x, mark).
CoefficientSet scalar_markov_coeffs(
    std::function<double(double, double)> a,
    std::function<double(double, double)> b,
    std::function<double(double, double)> sigma,
    std::function<double(double, double, double)> h = {},
    std::function<double(double, double, double)> phi = {});

// Path-dependent coefficients f(s, view); h/phi take (s, view, mark).
CoefficientSet scalar_pathdep_coeffs(
    std::function<double(double, const PathHistoryView&)> a,
    std::function<double(double, const PathHistoryView&)> b,
    std::function<double(double, const PathHistoryView&)> sigma,
    std::function<double(double, const PathHistoryView&, double)> h = {},
    std::function<double(double, const PathHistoryView&, double)> phi = {});

}  // namespace stochexp
