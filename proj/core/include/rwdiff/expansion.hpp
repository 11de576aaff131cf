#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rwdiff/quadrature.hpp"

namespace rwdiff {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The warping function alpha on (0,T) together with its derivatives and the
// Hubble function H = alpha'/alpha.  Closed forms are supplied by the
// catalog; user models may leave alpha_second / H closed forms empty and
// fall back to finite differences.  Immutable after construction.
struct ExpansionModel {
  std::function<double(double)> alpha;
  std::function<double(double)> alpha_prime;
  std::function<double(double)> alpha_second_fn;  // optional
  std::function<double(double)> log_alpha_fn;     // optional
  std::function<double(double)> H_fn;             // optional
  std::function<double(double)> H_prime_fn;       // optional
  double T = kInf;
  std::string kind = "user";
  std::vector<double> params;
  // Working-range hint for probe grids (tabulated models have a bounded
  // table domain; analytic families leave the defaults).
  double t_domain_lo = 1e-12;
  double t_domain_hi = kInf;

  double H(double t) const;
  double H_prime(double t) const;  // closed form or scale-aware central FD
  double log_alpha(double t) const;
  double alpha_second(double t) const;
};

ExpansionModel catalog(const std::string& name,
                       const std::vector<double>& params = {});
// Synthetic constant-H model alpha(t) = exp(H t); used for the frozen-H
// comparison processes and exposed in the catalog as "exp".
ExpansionModel exponential_model(double H);
// Monotone cubic (Fritsch-Carlson) interpolation of strictly positive
// samples; at least 8 points required.
ExpansionModel tabulated_model(std::vector<double> t, std::vector<double> a);

struct GrowthClass {
  enum Kind { Polynomial, Subexponential, Exponential, BigCrunch, Indeterminate };
  Kind kind = Indeterminate;
  // c for Polynomial, kappa for Subexponential, H_inf for Exponential.
  double value = 0;
};

// Geometric probe grid t_k = t_min 2^k (12 points) clipped inside (0,T).
std::vector<double> default_probe_grid(const ExpansionModel& m);

GrowthClass classify_growth(const ExpansionModel& m,
                            std::vector<double> probe_grid = {});

struct HorizonIntegrals {
  double i_minus = 0;
  double i_plus = 0;
  double c0 = 0;
  bool indeterminate_minus = false;
  bool indeterminate_plus = false;
};

HorizonIntegrals horizon_integrals(const ExpansionModel& m, double c0 = 0,
                                   double tol = 1e-8);

double conformal_time(const ExpansionModel& m, double t0, double t,
                      double tol = 1e-10);

struct HypothesesReport {
  bool positivity = false;
  bool smooth = false;       // finite H' on the grid (C^2 proxy)
  bool h_monotone = false;   // log-concavity
  bool endpoint_ok = false;  // case (a) or case (b) behavior
  bool case_b = false;       // T < inf, alpha -> 0 at both ends, H -> -inf
  bool hypothesis2_ok = true;
  double kappa_window_lo = 0, kappa_window_hi = 0;
  bool all_pass() const {
    return positivity && smooth && h_monotone && endpoint_ok && hypothesis2_ok;
  }
};

HypothesesReport check_hypotheses(const ExpansionModel& m,
                                  std::vector<double> grid = {});

enum class Ternary { Yes, No, Indeterminate };

// Decision on the finiteness of \int^inf H(u)^p du (p = d for the
// transience criterion, 3 or slightly below 3 for the clock corollary).
Ternary h_power_integrable(const ExpansionModel& m, double p,
                           double tol = 1e-8);
inline Ternary hd_integrable(const ExpansionModel& m, int d,
                             double tol = 1e-8) {
  return h_power_integrable(m, static_cast<double>(d), tol);
}

struct EnergyReport {
  double weak_fraction = 0;
  double strong_fraction = 0;
  int points = 0;
};

EnergyReport energy_conditions(const ExpansionModel& m, int k,
                               std::vector<double> grid = {});

struct RegimePrediction {
  enum class Tdot {
    Transient,
    TransientInProbability,
    HarrisRecurrent,
    FiniteLifetimeDivergent,
    Indeterminate
  };
  enum class Direction { Converges, RecurrentSphericalBM, Indeterminate };
  enum class Position {
    ConvergesInFiber,
    EscapesAlongHypersurface,
    GreatCircle,
    Indeterminate
  };

  Tdot tdot_behavior = Tdot::Indeterminate;
  bool as_transient = false;  // TransientInProbability only
  double invariant_H = 0;     // HarrisRecurrent only
  bool clock_convergent = false;
  Direction direction_behavior = Direction::Indeterminate;
  Position position_behavior = Position::Indeterminate;
  bool lifetime_finite = false;
  GrowthClass growth;
  HorizonIntegrals horizons;
};

RegimePrediction predict_regimes(const ExpansionModel& m, int fiber_curvature,
                                 int d, double sigma);

const char* to_string(GrowthClass::Kind k);
const char* to_string(RegimePrediction::Tdot t);
const char* to_string(RegimePrediction::Direction d);
const char* to_string(RegimePrediction::Position p);

}  // namespace rwdiff
