#pragma once

#include <cstdint>
#include <vector>

#include "rwdiff/expansion.hpp"
#include "rwdiff/rng.hpp"

namespace rwdiff {

// Temporal state (s, t, a) with a = alpha(t) sqrt(tdot^2 - 1).  tdot and
// alpha are derived caches maintained by the integrator; the pseudo-norm
// identity -tdot^2 + alpha^2 (a^2/alpha^4) = -1 holds by construction.
// Primitive coordinates are the normalized b = a/alpha and log alpha(t):
// every regime keeps b representable, whereas a and alpha themselves overflow
// double range for exponentially growing warpings once t > ~709.  The raw
// a and alpha are kept as derived conveniences and may round to inf there.
struct TemporalState {
  double s = 0;
  double t = 0;
  double b = 0;          // primitive: a/alpha
  double log_alpha = 0;  // primitive: log alpha(t)
  double a = 0;          // derived: b e^{log_alpha} (may overflow)
  double tdot = 1;       // derived: sqrt(1 + b^2)
  double alpha = 1;      // derived: e^{log_alpha} (may overflow)
};

TemporalState make_temporal_state(double s, double t, double a,
                                  const ExpansionModel& m);

struct StepParams {
  double sigma = 1;
  int d = 3;
  double ds = 1e-3;
  bool adaptive = true;         // cap h so tdot*h <= (T - t)/10 when T < inf
  double eps_horizon = 1e-6;    // stop once t >= T - eps_horizon
};

enum class Termination { None, ProperTimeBudget, HorizonReached, NumericalFailure };

const char* to_string(Termination t);

struct StepOutcome {
  TemporalState state;
  Termination status = Termination::None;  // None: keep stepping
  double h = 0;                            // step size actually taken
};

// One Euler-Maruyama step of the (t, a^2) system; dW is a standard normal
// draw.  The update is applied to b^2 = a^2/alpha^2(t) (the same update,
// divided through by alpha^2(t), with the alpha ratio taken in log space)
// so long runs cannot overflow a^2.
StepOutcome step_temporal(const TemporalState& state, const ExpansionModel& m,
                          const StepParams& p, double dW);

struct TemporalSample {
  double s = 0, t = 0, tdot = 1, a = 0;
  double clock = 0;          // C_s = sigma^2 \int ds/(tdot^2-1), trapezoid
  double conformal = 0;      // A_s = \int a/alpha^2 ds, trapezoid
  double log_int_alpha = 0;  // log \int alpha(t_u) tdot_u du, log-space trapezoid
  double log_a = 0;          // log a; stays finite when a itself overflows
};

struct TemporalPath {
  std::vector<TemporalSample> samples;
  Termination terminated = Termination::ProperTimeBudget;
  std::uint64_t steps = 0;
};

TemporalPath simulate_temporal(TemporalState init, const ExpansionModel& m,
                               const StepParams& p, double s_max, Rng& rng,
                               int thin = 1);

// Regularized entrance start near the Big Bang: requires I_-(alpha) < inf;
// returns (s=0, t_start, a0) with t_start the smallest probe time where
// alpha >= alpha_floor (default 1e-3 times the early-grid sup of alpha).
TemporalState entrance_start(const ExpansionModel& m, double a0,
                             const StepParams& p, double alpha_floor = 0);

// Invariant law nu_{H,sigma} of the constant-H temporal diffusion on (1,inf):
// density proportional to (x^2-1)^{d/2-1} exp(-2Hx/sigma^2).
class InvariantMeasure {
 public:
  InvariantMeasure(double H, double sigma, int d);
  double unnormalized(double x) const;
  double pdf(double x) const;
  double cdf(double x) const;
  double Z() const { return Z_; }
  double mean() const { return mean_; }
  double moment_inv_sq() const { return inv_sq_; }  // \int x^{-2} nu(dx)

 private:
  double H_, sigma_, Z_, mean_, inv_sq_;
  int d_;
  std::vector<double> grid_, cum_;
};

// (unnormalized, normalized) density values at x.
std::pair<double, double> invariant_density(double H, double sigma, int d,
                                            double x);

// Rejection sampler for nu_{H,sigma}: proposal x - 1 ~ Gamma(d/2, sigma^2/H)
// (half the target's exponential rate), acceptance ratio
// (u+2)^{d/2-1} exp(-Hu/sigma^2) bounded at u* = (d/2-1) sigma^2/H - 2.
double sample_invariant(double H, double sigma, int d, Rng& rng);

struct ComparisonTriple {
  TemporalPath u;     // frozen H(t0): strongest downward drift, lower bound
  TemporalPath tdot;  // the true model
  TemporalPath v;     // frozen H_inf: weakest drift, upper bound
};

// Three processes driven by the same Brownian increments; the frozen-H
// processes run the same scheme on the synthetic model exp(H_frozen t).
ComparisonTriple comparison_triple(TemporalState init, const ExpansionModel& m,
                                   const StepParams& p, double s_max, Rng& rng,
                                   int thin = 1);

struct Rates {
  double rate_tdot = 0;
  double rate_alpha = 0;
  double rate_int_alpha = 0;
};

// Least-squares slopes of log tdot, log alpha(t), log \int alpha over the
// trailing tail_fraction of the path.
Rates rate_estimate(const TemporalPath& path, const ExpansionModel& m,
                    double tail_fraction = 0.2);

struct ClockVerdict {
  bool converging = false;
  double value = 0;  // clock estimate when converging, tail slope otherwise
};

ClockVerdict clock_diagnostic(const TemporalPath& path, int window,
                              double tol_clock = 1e-2);

}  // namespace rwdiff
