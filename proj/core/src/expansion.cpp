#include "rwdiff/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace rwdiff {
namespace {

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::fmax(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log of \int_a^b alpha, computed entirely in log space so that models with
// alpha far beyond double range on the probe grid still classify.
double log_integral_alpha(const ExpansionModel& m, double a, double b) {
  double scale = std::fmax(m.log_alpha(a), m.log_alpha(b));
  // The scaled integrand is <= 1, so the integral is at most b - a; an
  // absolute tolerance finer than rounding noise at that magnitude would
  // recurse to the depth cap.
  double tol = 1e-12 * std::fmax(1.0, b - a);
  double v = integrate([&](double u) { return std::exp(m.log_alpha(u) - scale); },
                       a, b, tol);
  if (v <= 0) return -kInf;
  return scale + std::log(v);
}

// Fritsch-Carlson monotone cubic interpolant.
struct Pchip {
  std::vector<double> x, y, d;  // nodes, values, node derivatives

  Pchip(std::vector<double> xs, std::vector<double> ys)
      : x(std::move(xs)), y(std::move(ys)) {
    size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x[i + 1] - x[i];
      delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    d.assign(n, 0.0);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0) {
        d[i] = 0;
      } else {
        double w1 = 2 * h[i] + h[i - 1];
        double w2 = h[i] + 2 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    // Clamp endpoint slopes (standard monotonicity fix-up).
    for (size_t i : {size_t(0), n - 1}) {
      size_t j = (i == 0) ? 0 : n - 2;
      if (delta[j] == 0) {
        d[i] = 0;
      } else if (d[i] / delta[j] < 0) {
        d[i] = 0;
      } else if (std::fabs(d[i]) > 3 * std::fabs(delta[j])) {
        d[i] = 3 * delta[j];
      }
    }
  }

  size_t cell(double t) const {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    size_t i = (it == x.begin()) ? 0 : (it - x.begin() - 1);
    return std::min(i, x.size() - 2);
  }

  double eval(double t) const {
    size_t i = cell(t);
    double h = x[i + 1] - x[i];
    double s = (t - x[i]) / h;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    double h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s);
    double h11 = s * s * (s - 1);
    return h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1];
  }

  double deriv(double t) const {
    size_t i = cell(t);
    double h = x[i + 1] - x[i];
    double s = (t - x[i]) / h;
    double g00 = 6 * s * (s - 1) / h;
    double g10 = (1 - s) * (1 - 3 * s);
    double g01 = -g00;
    double g11 = s * (3 * s - 2);
    return g00 * y[i] + g10 * d[i] + g01 * y[i + 1] + g11 * d[i + 1];
  }
};

}  // namespace

double ExpansionModel::H(double t) const {
  if (H_fn) return H_fn(t);
  return alpha_prime(t) / alpha(t);
}

double ExpansionModel::H_prime(double t) const {
  if (H_prime_fn) return H_prime_fn(t);
  double h = std::fmax(1e-6, 1e-6 * t);
  if (T < kInf) h = std::fmin(h, 0.25 * (T - t));
  h = std::fmin(h, 0.25 * t);
  return (H(t + h) - H(t - h)) / (2 * h);
}

double ExpansionModel::log_alpha(double t) const {
  if (log_alpha_fn) return log_alpha_fn(t);
  return std::log(alpha(t));
}

double ExpansionModel::alpha_second(double t) const {
  if (alpha_second_fn) return alpha_second_fn(t);
  double h = std::fmax(1e-6, 1e-6 * t);
  if (T < kInf) h = std::fmin(h, 0.25 * (T - t));
  h = std::fmin(h, 0.25 * t);
  return (alpha_prime(t + h) - alpha_prime(t - h)) / (2 * h);
}

ExpansionModel exponential_model(double H) {
  ExpansionModel m;
  m.kind = "exp";
  m.params = {H};
  m.T = kInf;
  m.alpha = [H](double t) { return std::exp(H * t); };
  m.alpha_prime = [H](double t) { return H * std::exp(H * t); };
  m.alpha_second_fn = [H](double t) { return H * H * std::exp(H * t); };
  m.log_alpha_fn = [H](double t) { return H * t; };
  m.H_fn = [H](double) { return H; };
  m.H_prime_fn = [](double) { return 0.0; };
  return m;
}

ExpansionModel tabulated_model(std::vector<double> t, std::vector<double> a) {
  if (t.size() != a.size() || t.size() < 8) {
    throw std::invalid_argument("tabulated model needs >= 8 (t, alpha) pairs");
  }
  for (size_t i = 0; i < t.size(); ++i) {
    if (a[i] <= 0) throw std::invalid_argument("tabulated alpha must be > 0");
    if (i > 0 && t[i] <= t[i - 1]) {
      throw std::invalid_argument("tabulated t must be strictly increasing");
    }
  }
  auto p = std::make_shared<Pchip>(std::move(t), std::move(a));
  ExpansionModel m;
  m.kind = "tabulated";
  m.T = kInf;
  m.t_domain_lo = p->x.front();
  m.t_domain_hi = p->x.back();
  m.alpha = [p](double u) { return p->eval(u); };
  m.alpha_prime = [p](double u) { return p->deriv(u); };
  return m;
}

ExpansionModel catalog(const std::string& name,
                       const std::vector<double>& params) {
  auto need = [&](size_t n) {
    if (params.size() != n) {
      throw std::invalid_argument("catalog(" + name + "): expected " +
                                  std::to_string(n) + " parameter(s)");
    }
  };
  ExpansionModel m;
  m.kind = name;
  m.params = params;
  if (name == "constant") {
    need(0);
    m.alpha = [](double) { return 1.0; };
    m.alpha_prime = [](double) { return 0.0; };
    m.alpha_second_fn = [](double) { return 0.0; };
    m.log_alpha_fn = [](double) { return 0.0; };
    m.H_fn = [](double) { return 0.0; };
    m.H_prime_fn = [](double) { return 0.0; };
    return m;
  }
  if (name == "power") {
    need(1);
    double c = params[0];
    if (c < 0) throw std::invalid_argument("power: c must be >= 0");
    m.alpha = [c](double t) { return std::pow(t, c); };
    m.alpha_prime = [c](double t) { return c * std::pow(t, c - 1); };
    m.alpha_second_fn = [c](double t) { return c * (c - 1) * std::pow(t, c - 2); };
    m.log_alpha_fn = [c](double t) { return c * std::log(t); };
    // The source table's printed "H(t) = t/c" is inconsistent with
    // H = alpha'/alpha; the definition gives c/t, used here.
    m.H_fn = [c](double t) { return c / t; };
    m.H_prime_fn = [c](double t) { return -c / (t * t); };
    return m;
  }
  if (name == "power_exp") {
    need(2);
    double g = params[0], b = params[1];
    if (g < 0 || b <= 0 || b >= 1) {
      throw std::invalid_argument("power_exp: need gamma >= 0, beta in (0,1)");
    }
    m.alpha = [g, b](double t) { return std::pow(t, g) * std::exp(std::pow(t, b)); };
    m.log_alpha_fn = [g, b](double t) { return g * std::log(t) + std::pow(t, b); };
    m.H_fn = [g, b](double t) { return g / t + b * std::pow(t, b - 1); };
    m.H_prime_fn = [g, b](double t) {
      return -g / (t * t) + b * (b - 1) * std::pow(t, b - 2);
    };
    m.alpha_prime = [m_alpha = m.alpha, m_H = m.H_fn](double t) {
      return m_alpha(t) * m_H(t);
    };
    m.alpha_second_fn = [m_alpha = m.alpha, m_H = m.H_fn,
                         m_Hp = m.H_prime_fn](double t) {
      double H = m_H(t);
      return m_alpha(t) * (H * H + m_Hp(t));
    };
    return m;
  }
  if (name == "sinh") {
    need(0);
    m.alpha = [](double t) { return std::sinh(t); };
    m.alpha_prime = [](double t) { return std::cosh(t); };
    m.alpha_second_fn = [](double t) { return std::sinh(t); };
    // Stable for large t: log sinh t = t - log 2 + log1p(-exp(-2t)).
    m.log_alpha_fn = [](double t) {
      return t - 0.6931471805599453 + std::log1p(-std::exp(-2 * t));
    };
    m.H_fn = [](double t) { return 1.0 / std::tanh(t); };
    m.H_prime_fn = [](double t) {
      double s = std::sinh(t);
      return -1.0 / (s * s);
    };
    return m;
  }
  if (name == "big_crunch_radiation") {
    need(0);
    m.T = 2.0;
    m.alpha = [](double t) { return std::sqrt(t * (2 - t)); };
    m.alpha_prime = [](double t) { return (1 - t) / std::sqrt(t * (2 - t)); };
    m.alpha_second_fn = [](double t) {
      double a2 = t * (2 - t);
      return -1.0 / std::sqrt(a2) * (1.0 + (1 - t) * (1 - t) / a2);
    };
    m.log_alpha_fn = [](double t) { return 0.5 * std::log(t * (2 - t)); };
    m.H_fn = [](double t) { return (1 - t) / (t * (2 - t)); };
    m.H_prime_fn = [](double t) {
      double a2 = t * (2 - t);
      // d/dt [(1-t)/a2] = [-a2 - (1-t) * (2-2t)] / a2^2
      return (-a2 - 2 * (1 - t) * (1 - t)) / (a2 * a2);
    };
    return m;
  }
  if (name == "exp") {
    need(1);
    return exponential_model(params[0]);
  }
  throw std::invalid_argument("catalog: unknown model '" + name + "'");
}

std::vector<double> default_probe_grid(const ExpansionModel& m) {
  std::vector<double> g(12);
  if (m.T < kInf) {
    double lo = m.T / 4096.0;
    for (int k = 0; k < 12; ++k) g[k] = lo * std::pow(2.0, k);
  } else {
    // Deep tail grid: the polynomial/subexponential split needs very large t
    // before log alpha / log int alpha is near its limit.
    double hi = std::fmin(m.t_domain_hi, std::pow(2.0, 40));
    for (int k = 0; k < 12; ++k) g[k] = hi * std::pow(2.0, k - 11);
    if (g.front() < m.t_domain_lo) {
      double lo = m.t_domain_lo;
      double ratio = std::pow(m.t_domain_hi / lo, 1.0 / 11.0);
      for (int k = 0; k < 12; ++k) g[k] = lo * std::pow(ratio, k);
    }
  }
  return g;
}

GrowthClass classify_growth(const ExpansionModel& m,
                            std::vector<double> grid) {
  if (m.T < kInf) return {GrowthClass::BigCrunch, 0};
  if (grid.empty()) grid = default_probe_grid(m);
  size_t n = grid.size();
  if (n < 6) return {GrowthClass::Indeterminate, 0};

  const double tol_H = 1e-3;
  const double tol_r = 0.05;

  // Exponential test: Richardson-extrapolated H on the geometric tail
  // (e_k = 2 H_k - H_{k-1} cancels the 1/t correction); declare a limit only
  // when the last three extrapolants agree in relative terms.
  std::vector<double> e;
  for (size_t k = 1; k < n; ++k) e.push_back(2 * m.H(grid[k]) - m.H(grid[k - 1]));
  size_t ne = e.size();
  double scale = std::fmax(std::fabs(e[ne - 1]), tol_H);
  bool stable = std::fabs(e[ne - 1] - e[ne - 2]) <= tol_H * scale &&
                std::fabs(e[ne - 2] - e[ne - 3]) <= tol_H * scale;
  if (stable && e[ne - 1] > tol_H) {
    return {GrowthClass::Exponential, e[ne - 1]};
  }

  // Polynomial vs subexponential: tail of r(t) = log alpha / log int alpha.
  double logI = -kInf;
  double prev = grid[0] / 2;
  std::vector<double> r;
  for (size_t k = 0; k < n; ++k) {
    logI = logaddexp(logI, log_integral_alpha(m, prev, grid[k]));
    prev = grid[k];
    double la = m.log_alpha(grid[k]);
    if (std::fabs(logI) > 1e-9) r.push_back(la / logI);
  }
  if (r.size() < 4) {
    // alpha bounded (e.g. constant): log alpha / log int alpha -> 0.
    double c = std::fmax(0.0, 2 * m.H(grid[n - 1]) * grid[n - 1] -
                                  m.H(grid[n - 2]) * grid[n - 2]);
    return {GrowthClass::Polynomial, c};
  }
  double r_tail = -kInf;
  for (size_t k = r.size() - 4; k < r.size(); ++k) r_tail = std::fmax(r_tail, r[k]);
  if (r_tail < 1.0 - tol_r) {
    double c = std::fmax(0.0, 2 * m.H(grid[n - 1]) * grid[n - 1] -
                                  m.H(grid[n - 2]) * grid[n - 2]);
    return {GrowthClass::Polynomial, c};
  }
  double kappa = 0;
  for (size_t k = n - 4; k < n; ++k) {
    double H = m.H(grid[k]);
    if (H > 0) kappa = std::fmax(kappa, -m.H_prime(grid[k]) / (H * H));
  }
  return {GrowthClass::Subexponential, kappa};
}

HorizonIntegrals horizon_integrals(const ExpansionModel& m, double c0,
                                   double tol) {
  HorizonIntegrals out;
  if (c0 <= 0) c0 = (m.T < kInf) ? 0.5 * m.T : std::fmax(1.0, m.t_domain_lo * 2);
  out.c0 = c0;
  auto inv_alpha = [&](double t) { return 1.0 / m.alpha(t); };
  ImproperResult lo = improper_integral(inv_alpha, c0, 0.0, tol);
  ImproperResult hi = improper_integral(inv_alpha, c0, m.T, tol);
  // Integration toward 0 runs downward; the signed value is negative.
  out.i_minus = (lo.verdict == ImproperVerdict::Infinite) ? kInf : -lo.value;
  out.i_plus = (hi.verdict == ImproperVerdict::Infinite) ? kInf : hi.value;
  out.indeterminate_minus = lo.verdict == ImproperVerdict::Indeterminate;
  out.indeterminate_plus = hi.verdict == ImproperVerdict::Indeterminate;
  return out;
}

double conformal_time(const ExpansionModel& m, double t0, double t,
                      double tol) {
  // Wide ranges (t/t0 spanning many decades) integrate in log coordinates:
  // \int du/alpha(u) = \int e^v / alpha(e^v) dv, v = log u, which keeps the
  // adaptive refinement depth proportional to the number of decades.
  if (t0 > 0 && t > 0 && (t / t0 > 100.0 || t0 / t > 100.0)) {
    double v0 = std::log(t0), v1 = std::log(t);
    return integrate(
        [&](double v) { return std::exp(v - m.log_alpha(std::exp(v))); }, v0,
        v1, tol * std::fmax(1.0, std::fabs(v1 - v0)));
  }
  return integrate([&](double u) { return 1.0 / m.alpha(u); }, t0, t, tol);
}

HypothesesReport check_hypotheses(const ExpansionModel& m,
                                  std::vector<double> grid) {
  if (grid.empty()) grid = default_probe_grid(m);
  HypothesesReport rep;
  rep.positivity = true;
  rep.smooth = true;
  rep.h_monotone = true;
  double h_prev = kInf;
  double kap_lo = kInf, kap_hi = -kInf;
  for (double t : grid) {
    // Judge positivity in log space once alpha itself overflows double range
    // (the deep-tail grid reaches t ~ 2^40, far past overflow for
    // exponentially growing warpings).
    double a = m.alpha(t);
    bool positive = a > 0 && std::isfinite(a);
    if (!positive && a == kInf) positive = std::isfinite(m.log_alpha(t));
    if (!positive) rep.positivity = false;
    double hp = m.H_prime(t);
    if (!std::isfinite(hp)) rep.smooth = false;
    double h = m.H(t);
    if (h > h_prev * (1 + 1e-9) + 1e-12) rep.h_monotone = false;
    h_prev = h;
    if (h > 0) {
      double q = -hp / (h * h);
      kap_lo = std::fmin(kap_lo, q);
      kap_hi = std::fmax(kap_hi, q);
    }
  }
  rep.kappa_window_lo = std::isfinite(kap_lo) ? kap_lo : 0;
  rep.kappa_window_hi = std::isfinite(kap_hi) ? kap_hi : 0;
  rep.hypothesis2_ok = std::isfinite(kap_hi) || kap_hi == -kInf;

  if (m.T == kInf) {
    // Case (a): H >= 0 along the grid.
    rep.endpoint_ok = true;
    for (double t : grid) {
      if (m.H(t) < -1e-9) rep.endpoint_ok = false;
    }
    rep.case_b = false;
  } else {
    // Case (b): alpha -> 0 at both endpoints, H -> -inf at T-.
    double a_sup = 0;
    for (double t : grid) a_sup = std::fmax(a_sup, m.alpha(t));
    double d_small = m.T * std::pow(2.0, -20);
    bool lo_vanish = m.alpha(d_small) < 0.05 * a_sup;
    bool hi_vanish = m.alpha(m.T - d_small) < 0.05 * a_sup;
    bool h_blows = m.H(m.T - d_small) < -10.0 &&
                   m.H(m.T - d_small) < m.H(m.T - 4 * d_small);
    rep.case_b = lo_vanish && hi_vanish && h_blows;
    rep.endpoint_ok = rep.case_b;
  }
  return rep;
}

Ternary h_power_integrable(const ExpansionModel& m, double p, double tol) {
  if (m.T < kInf) {
    throw std::invalid_argument("h_power_integrable requires T = +inf");
  }
  double c0 = std::fmax(1.0, m.t_domain_lo * 2);
  auto f = [&](double t) {
    double h = m.H(t);
    return (h <= 0) ? 0.0 : std::pow(h, p);
  };
  ImproperResult r = improper_integral(f, c0, kInf, tol);
  switch (r.verdict) {
    case ImproperVerdict::Finite:
      return Ternary::Yes;
    case ImproperVerdict::Infinite:
      return Ternary::No;
    default:
      return Ternary::Indeterminate;
  }
}

EnergyReport energy_conditions(const ExpansionModel& m, int k,
                               std::vector<double> grid) {
  if (grid.empty()) grid = default_probe_grid(m);
  EnergyReport rep;
  rep.points = static_cast<int>(grid.size());
  int weak_ok = 0, strong_ok = 0;
  for (double t : grid) {
    double a = m.alpha(t);
    double ap = m.alpha_prime(t);
    double app = m.alpha_second(t);
    double weak = -2.0 * (app / a - (ap * ap) / (a * a) + 2.0 * k / (a * a));
    double strong = -app;
    if (weak >= -1e-12) ++weak_ok;
    if (strong >= -1e-12) ++strong_ok;
  }
  rep.weak_fraction = double(weak_ok) / rep.points;
  rep.strong_fraction = double(strong_ok) / rep.points;
  return rep;
}

RegimePrediction predict_regimes(const ExpansionModel& m, int fiber_curvature,
                                 int d, double sigma) {
  (void)sigma;
  RegimePrediction p;
  p.growth = classify_growth(m);
  p.horizons = horizon_integrals(m);
  p.lifetime_finite = m.T < kInf;

  using T = RegimePrediction::Tdot;
  switch (p.growth.kind) {
    case GrowthClass::BigCrunch:
      p.tdot_behavior = T::FiniteLifetimeDivergent;
      p.clock_convergent = true;
      break;
    case GrowthClass::Polynomial:
      p.tdot_behavior = T::Transient;
      p.clock_convergent = true;
      break;
    case GrowthClass::Exponential:
      p.tdot_behavior = T::HarrisRecurrent;
      p.invariant_H = p.growth.value;
      p.clock_convergent = false;
      break;
    case GrowthClass::Subexponential: {
      p.tdot_behavior = T::TransientInProbability;
      p.as_transient = hd_integrable(m, d) == Ternary::Yes;
      // Clock corollary: convergent iff H^3 in L^1 (d > 3) or H^3 in L^{1-}
      // (d = 3); the critical case H^3 in L^1 \ L^{1-} diverges.  L^{1-} is
      // probed numerically with the exponent 3(1 - 0.01).
      Ternary cube = h_power_integrable(m, 3.0);
      if (cube != Ternary::Yes) {
        p.clock_convergent = false;
      } else if (d > 3) {
        p.clock_convergent = true;
      } else {
        p.clock_convergent = h_power_integrable(m, 3.0 * 0.99) == Ternary::Yes;
      }
      break;
    }
    default:
      p.tdot_behavior = T::Indeterminate;
      return p;
  }

  p.direction_behavior = p.clock_convergent
                             ? RegimePrediction::Direction::Converges
                             : RegimePrediction::Direction::RecurrentSphericalBM;
  if (p.horizons.i_plus < kInf) {
    p.position_behavior = RegimePrediction::Position::ConvergesInFiber;
  } else {
    p.position_behavior = (fiber_curvature == 1)
                              ? RegimePrediction::Position::GreatCircle
                              : RegimePrediction::Position::EscapesAlongHypersurface;
  }
  return p;
}

const char* to_string(GrowthClass::Kind k) {
  switch (k) {
    case GrowthClass::Polynomial: return "Polynomial";
    case GrowthClass::Subexponential: return "Subexponential";
    case GrowthClass::Exponential: return "Exponential";
    case GrowthClass::BigCrunch: return "BigCrunch";
    default: return "Indeterminate";
  }
}

const char* to_string(RegimePrediction::Tdot t) {
  using T = RegimePrediction::Tdot;
  switch (t) {
    case T::Transient: return "Transient";
    case T::TransientInProbability: return "TransientInProbability";
    case T::HarrisRecurrent: return "HarrisRecurrent";
    case T::FiniteLifetimeDivergent: return "FiniteLifetimeDivergent";
    default: return "Indeterminate";
  }
}

const char* to_string(RegimePrediction::Direction d) {
  using D = RegimePrediction::Direction;
  switch (d) {
    case D::Converges: return "Converges";
    case D::RecurrentSphericalBM: return "RecurrentSphericalBM";
    default: return "Indeterminate";
  }
}

const char* to_string(RegimePrediction::Position p) {
  using P = RegimePrediction::Position;
  switch (p) {
    case P::ConvergesInFiber: return "ConvergesInFiber";
    case P::EscapesAlongHypersurface: return "EscapesAlongHypersurface";
    case P::GreatCircle: return "GreatCircle";
    default: return "Indeterminate";
  }
}

}  // namespace rwdiff
