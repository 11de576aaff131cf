#pragma once

#include <functional>

namespace rwdiff {

using Integrand = std::function<double(double)>;

// Adaptive Simpson on a finite interval with regular integrand.
double integrate(const Integrand& f, double a, double b, double tol = 1e-10);

enum class ImproperVerdict { Finite, Infinite, Indeterminate };

struct ImproperResult {
  ImproperVerdict verdict = ImproperVerdict::Indeterminate;
  double value = 0;  // meaningful only when Finite
};

// Integral of f between the regular interior point `from` and `endpoint`,
// which may be a singular finite endpoint (either side of `from`) or +inf.
// Geometric refinement toward the endpoint; divergence is declared when
// doubling the refinement depth multiplies the partial sum by more than
// `growth_factor` three consecutive times (monotone-tail heuristic).
ImproperResult improper_integral(const Integrand& f, double from,
                                 double endpoint, double tol = 1e-8,
                                 double growth_factor = 1.5);

}  // namespace rwdiff
