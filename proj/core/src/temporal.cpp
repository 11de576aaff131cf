#include "rwdiff/temporal.hpp"

#include <cmath>
#include <stdexcept>

namespace rwdiff {
namespace {

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::fmax(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Integrands {
  double clock;      // sigma^2 / (tdot^2 - 1)
  double conformal;  // a / alpha^2
  double log_ia;     // log(alpha(t) tdot)
};

Integrands integrands_at(const TemporalState& x, const ExpansionModel& m,
                         const StepParams& p) {
  double b = x.b;
  double b2 = b * b;
  Integrands f;
  // b2 is clamped away from zero: the clock integrand is genuinely singular
  // at tdot = 1 but the set {a = 0} is polar for sigma > 0.
  f.clock = p.sigma * p.sigma / std::fmax(b2, 1e-14);
  f.conformal = b * std::exp(-x.log_alpha);
  f.log_ia = m.log_alpha(x.t) + std::log(x.tdot);
  return f;
}

// Accumulator shared by simulate_temporal and comparison_triple.
struct PathBuilder {
  TemporalPath path;
  double clock = 0, conformal = 0, log_ia = -kInf;
  Integrands prev{};
  bool primed = false;

  void prime(const TemporalState& st, const ExpansionModel& m,
             const StepParams& p) {
    prev = integrands_at(st, m, p);
    primed = true;
    record(st);
  }

  void accumulate(const TemporalState& st, const ExpansionModel& m,
                  const StepParams& p, double h) {
    Integrands cur = integrands_at(st, m, p);
    clock += 0.5 * (prev.clock + cur.clock) * h;
    conformal += 0.5 * (prev.conformal + cur.conformal) * h;
    log_ia = logaddexp(log_ia, std::log(0.5 * h) +
                                   logaddexp(prev.log_ia, cur.log_ia));
    prev = cur;
  }

  void record(const TemporalState& st) {
    path.samples.push_back({st.s, st.t, st.tdot, st.a, clock, conformal, log_ia,
                            st.log_alpha + std::log(st.b)});
  }
};

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::ProperTimeBudget: return "ProperTimeBudget";
    case Termination::HorizonReached: return "HorizonReached";
    case Termination::NumericalFailure: return "NumericalFailure";
    default: return "None";
  }
}

TemporalState make_temporal_state(double s, double t, double a,
                                  const ExpansionModel& m) {
  if (a < 0) throw std::invalid_argument("temporal state needs a >= 0");
  TemporalState st;
  st.s = s;
  st.t = t;
  st.log_alpha = m.log_alpha(t);
  st.alpha = m.alpha(t);
  st.b = a / st.alpha;
  st.a = a;
  st.tdot = std::hypot(1.0, st.b);
  return st;
}

StepOutcome step_temporal(const TemporalState& state, const ExpansionModel& m,
                          const StepParams& p, double dW) {
  double h = p.ds;
  if (p.adaptive && m.T < kInf) {
    h = std::fmin(h, (m.T - state.t) / (10.0 * state.tdot));
  }
  double b = state.b;
  double b2 = b * b;
  double s2 = p.sigma * p.sigma;
  // Euler-Maruyama on a^2, written in b^2 = a^2/alpha^2(t): identical update
  // divided through by alpha^2(t) (so d sigma^2 alpha^2 -> d sigma^2, and the
  // bracket 4 sigma^2 a^2(a^2+alpha^2) -> 4 sigma^2 b^2(b^2+1)).
  double b2_new = b2 + ((p.d + 1) * s2 * b2 + p.d * s2) * h +
                  2.0 * p.sigma * b * std::hypot(b, 1.0) * std::sqrt(h) * dW;
  if (b2_new < 0) b2_new = 0;  // truncation: drift at 0 is strictly inward

  double t_new = state.t + state.tdot * h;
  StepOutcome out;
  out.h = h;
  out.state.s = state.s + h;
  out.state.t = t_new;
  if (m.T < kInf && t_new >= m.T - p.eps_horizon) {
    out.status = Termination::HorizonReached;
    t_new = std::fmin(t_new, m.T - p.eps_horizon);
    out.state.t = t_new;
  }
  // Transport b^2 across the time update: multiply by alpha^2(t)/alpha^2(t'),
  // taken in log space so the ratio never overflows.
  double la_new = m.log_alpha(t_new);
  double ratio = std::exp(2.0 * (state.log_alpha - la_new));
  double b_new = std::sqrt(b2_new * ratio);
  out.state.b = b_new;
  out.state.log_alpha = la_new;
  out.state.alpha = std::exp(la_new);        // may round to inf (display only)
  out.state.a = out.state.alpha * b_new;     // may round to inf (display only)
  out.state.tdot = std::hypot(1.0, b_new);
  if (!std::isfinite(out.state.t) || !std::isfinite(b_new) ||
      !std::isfinite(out.state.tdot)) {
    out.status = Termination::NumericalFailure;
  }
  return out;
}

TemporalPath simulate_temporal(TemporalState init, const ExpansionModel& m,
                               const StepParams& p, double s_max, Rng& rng,
                               int thin) {
  if (thin < 1) thin = 1;
  PathBuilder pb;
  pb.prime(init, m, p);
  TemporalState st = init;
  std::uint64_t steps = 0;
  Termination why = Termination::ProperTimeBudget;
  const double s_end = s_max - 1e-12 * std::fmax(1.0, s_max);

  while (st.s < s_end) {
    if (m.T < kInf && st.t >= m.T - p.eps_horizon) {
      why = Termination::HorizonReached;
      break;
    }
    StepOutcome out = step_temporal(st, m, p, rng.normal());
    if (out.status == Termination::NumericalFailure) {
      why = Termination::NumericalFailure;
      break;
    }
    pb.accumulate(out.state, m, p, out.h);
    st = out.state;
    ++steps;
    bool done = (out.status == Termination::HorizonReached) || st.s >= s_end;
    if (steps % static_cast<std::uint64_t>(thin) == 0 || done) pb.record(st);
    if (out.status == Termination::HorizonReached) {
      why = Termination::HorizonReached;
      break;
    }
  }
  if (pb.path.samples.back().s < st.s) pb.record(st);
  pb.path.terminated = why;
  pb.path.steps = steps;
  return pb.path;
}

TemporalState entrance_start(const ExpansionModel& m, double a0,
                             const StepParams& p, double alpha_floor) {
  HorizonIntegrals hz = horizon_integrals(m);
  if (!(hz.i_minus < kInf)) {
    throw std::invalid_argument(
        "entrance_start requires a finite past horizon I_-(alpha)");
  }
  double hi = (m.T < kInf) ? 0.5 * m.T : 1.0;
  hi = std::fmin(hi, 1.0);
  const int n = 121;
  double sup = 0;
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) {
    grid[k] = hi * std::pow(2.0, (k - (n - 1)) / 3.0);
    sup = std::fmax(sup, m.alpha(grid[k]));
  }
  if (alpha_floor <= 0) alpha_floor = 1e-3 * sup;
  for (int k = 0; k < n; ++k) {
    if (m.alpha(grid[k]) >= alpha_floor) {
      return make_temporal_state(0.0, grid[k], a0, m);
    }
  }
  throw std::invalid_argument("entrance_start: alpha never reaches the floor");
}

InvariantMeasure::InvariantMeasure(double H, double sigma, int d)
    : H_(H), sigma_(sigma), d_(d) {
  if (!(H > 0) || !(sigma > 0) || d < 3) {
    throw std::invalid_argument("InvariantMeasure needs H > 0, sigma > 0, d >= 3");
  }
  auto f = [this](double x) { return unnormalized(x); };
  auto weighted = [&](auto g) {
    double head = integrate([&](double x) { return g(x) * f(x); }, 1.0, 2.0, 1e-13);
    ImproperResult tail = improper_integral(
        [&](double x) { return g(x) * f(x); }, 2.0, kInf, 1e-12);
    return head + tail.value;
  };
  Z_ = weighted([](double) { return 1.0; });
  mean_ = weighted([](double x) { return x; }) / Z_;
  inv_sq_ = weighted([](double x) { return 1.0 / (x * x); }) / Z_;

  // CDF nodes graded toward the x = 1 edge.
  double xmax = 1.0 + sigma * sigma / (2.0 * H) * (60.0 + 10.0 * d);
  const int n = 1024;
  grid_.resize(n + 1);
  cum_.resize(n + 1);
  double llo = std::log(1e-8), lhi = std::log(xmax - 1.0);
  for (int j = 0; j <= n; ++j) {
    grid_[j] = 1.0 + std::exp(llo + (lhi - llo) * j / n);
  }
  cum_[0] = integrate(f, 1.0, grid_[0], 1e-14) / Z_;
  for (int j = 1; j <= n; ++j) {
    cum_[j] = cum_[j - 1] + integrate(f, grid_[j - 1], grid_[j], 1e-13) / Z_;
  }
}

double InvariantMeasure::unnormalized(double x) const {
  if (x <= 1.0) return 0.0;
  double m = 0.5 * d_ - 1.0;
  return std::pow(x * x - 1.0, m) * std::exp(-2.0 * H_ * x / (sigma_ * sigma_));
}

double InvariantMeasure::pdf(double x) const { return unnormalized(x) / Z_; }

double InvariantMeasure::cdf(double x) const {
  if (x <= 1.0) return 0.0;
  if (x >= grid_.back()) return 1.0;
  if (x <= grid_.front()) {
    return integrate([this](double u) { return unnormalized(u); }, 1.0, x,
                     1e-14) / Z_;
  }
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  size_t i = it - grid_.begin() - 1;
  double c = cum_[i] + integrate([this](double u) { return unnormalized(u); },
                                 grid_[i], x, 1e-13) / Z_;
  return std::fmin(c, 1.0);
}

std::pair<double, double> invariant_density(double H, double sigma, int d,
                                            double x) {
  InvariantMeasure nu(H, sigma, d);
  return {nu.unnormalized(x), nu.pdf(x)};
}

double sample_invariant(double H, double sigma, int d, Rng& rng) {
  double s2 = sigma * sigma;
  double shape = 0.5 * d;
  double scale = s2 / H;  // proposal rate H/sigma^2
  double m = 0.5 * d - 1.0;
  double u_star = std::fmax(0.0, m * s2 / H - 2.0);
  double logM = m * std::log(u_star + 2.0) - H * u_star / s2;
  for (int tries = 0; tries < 100000; ++tries) {
    double u = rng.gamma(shape) * scale;
    double logr = m * std::log(u + 2.0) - H * u / s2 - logM;
    if (std::log(rng.u01()) < logr) return 1.0 + u;
  }
  throw std::runtime_error("sample_invariant: rejection sampler stalled");
}

ComparisonTriple comparison_triple(TemporalState init, const ExpansionModel& m,
                                   const StepParams& p, double s_max, Rng& rng,
                                   int thin) {
  if (m.T < kInf) {
    throw std::invalid_argument("comparison_triple requires T = +inf (case a)");
  }
  if (thin < 1) thin = 1;
  GrowthClass g = classify_growth(m);
  double H_inf = (g.kind == GrowthClass::Exponential) ? g.value : 0.0;
  ExpansionModel mu = exponential_model(m.H(init.t));
  ExpansionModel mv = exponential_model(H_inf);

  double b0 = init.b;
  TemporalState su = make_temporal_state(init.s, init.t, mu.alpha(init.t) * b0, mu);
  TemporalState sm = init;
  TemporalState sv = make_temporal_state(init.s, init.t, mv.alpha(init.t) * b0, mv);

  PathBuilder bu, bm, bv;
  bu.prime(su, mu, p);
  bm.prime(sm, m, p);
  bv.prime(sv, mv, p);

  std::uint64_t steps = 0;
  Termination why = Termination::ProperTimeBudget;
  const double s_end = s_max - 1e-12 * std::fmax(1.0, s_max);
  while (sm.s < s_end) {
    double dW = rng.normal();
    StepOutcome ou = step_temporal(su, mu, p, dW);
    StepOutcome om = step_temporal(sm, m, p, dW);
    StepOutcome ov = step_temporal(sv, mv, p, dW);
    if (ou.status == Termination::NumericalFailure ||
        om.status == Termination::NumericalFailure ||
        ov.status == Termination::NumericalFailure) {
      why = Termination::NumericalFailure;
      break;
    }
    bu.accumulate(ou.state, mu, p, ou.h);
    bm.accumulate(om.state, m, p, om.h);
    bv.accumulate(ov.state, mv, p, ov.h);
    su = ou.state;
    sm = om.state;
    sv = ov.state;
    ++steps;
    if (steps % static_cast<std::uint64_t>(thin) == 0 || sm.s >= s_end) {
      bu.record(su);
      bm.record(sm);
      bv.record(sv);
    }
  }
  for (PathBuilder* b : {&bu, &bm, &bv}) {
    b->path.terminated = why;
    b->path.steps = steps;
  }
  ComparisonTriple out;
  out.u = std::move(bu.path);
  out.tdot = std::move(bm.path);
  out.v = std::move(bv.path);
  return out;
}

Rates rate_estimate(const TemporalPath& path, const ExpansionModel& m,
                    double tail_fraction) {
  size_t n = path.samples.size();
  size_t k = static_cast<size_t>(n * tail_fraction);
  if (k < 100) {
    throw std::invalid_argument("rate_estimate: need >= 100 tail samples");
  }
  size_t lo = n - k;
  auto slope = [&](auto y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = lo; i < n; ++i) {
      double x = path.samples[i].s;
      double v = y(path.samples[i]);
      sx += x;
      sy += v;
      sxx += x * x;
      sxy += x * v;
    }
    double nn = static_cast<double>(k);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  };
  Rates r;
  r.rate_tdot = slope([](const TemporalSample& s) { return std::log(s.tdot); });
  r.rate_alpha =
      slope([&](const TemporalSample& s) { return m.log_alpha(s.t); });
  r.rate_int_alpha =
      slope([](const TemporalSample& s) { return s.log_int_alpha; });
  return r;
}

ClockVerdict clock_diagnostic(const TemporalPath& path, int window,
                              double tol_clock) {
  size_t n = path.samples.size();
  if (window < 1 || n < 2 * static_cast<size_t>(window)) {
    throw std::invalid_argument("clock_diagnostic: need >= 2*window samples");
  }
  // A finite lifetime makes the clock trivially finite.
  if (path.terminated == Termination::HorizonReached) {
    return {true, path.samples[n - 1].clock};
  }
  // The divergent clock grows by heavy-tailed bursts (excursions of tdot
  // near 1), so a ratio test against the running total is dominated by the
  // single largest burst and misreads divergence as convergence.  Instead
  // test the growth *rate* over the tail window: the clock converges exactly
  // when its integrand sigma^2/(tdot^2-1) decays to 0.
  double inc = path.samples[n - 1].clock - path.samples[n - 1 - window].clock;
  double span = path.samples[n - 1].s - path.samples[n - 1 - window].s;
  if (span <= 0) return {true, path.samples[n - 1].clock};
  double rate = inc / span;
  if (rate <= tol_clock) return {true, path.samples[n - 1].clock};
  return {false, rate};
}

}  // namespace rwdiff
