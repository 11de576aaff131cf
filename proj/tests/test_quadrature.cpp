#include <cmath>

#include "doctest.h"
#include "rwdiff/quadrature.hpp"

using namespace rwdiff;

TEST_CASE("adaptive Simpson is exact on cubics and accurate on smooth f") {
  // \int_{-1}^{3} (x^3 - 2x) dx = 81/4 - 9 - (1/4 - 1) = 12.
  CHECK(integrate([](double x) { return x * x * x - 2 * x; }, -1, 3) ==
        doctest::Approx(12.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::exp(-x * x); }, 0, 5) ==
        doctest::Approx(0.5 * std::sqrt(std::acos(-1.0))).epsilon(1e-10));
}

TEST_CASE("improper integral: convergent tail at infinity") {
  ImproperResult r = improper_integral(
      [](double u) { return 1.0 / (u * u); }, 1.0, INFINITY, 1e-10);
  CHECK(r.verdict == ImproperVerdict::Finite);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("improper integral: divergent tail at infinity") {
  ImproperResult r =
      improper_integral([](double u) { return 1.0 / u; }, 1.0, INFINITY);
  CHECK(r.verdict == ImproperVerdict::Infinite);
}

TEST_CASE("improper integral: integrable singular endpoint") {
  ImproperResult r = improper_integral(
      [](double u) { return 1.0 / std::sqrt(u); }, 1.0, 0.0, 1e-10);
  CHECK(r.verdict == ImproperVerdict::Finite);
  CHECK(r.value == doctest::Approx(-2.0).epsilon(1e-7));  // oriented downward
}

TEST_CASE("improper integral: non-integrable singular endpoint") {
  ImproperResult r =
      improper_integral([](double u) { return 1.0 / u; }, 1.0, 0.0);
  CHECK(r.verdict == ImproperVerdict::Infinite);
}

TEST_CASE("improper integral survives an infinite value at the endpoint") {
  // 1/sqrt(t(2-t)) is singular at both ends; from t=1 up to the endpoint 2
  // the integral is pi/2.  The integrand evaluates to inf at t=2 itself.
  // An inverse-sqrt singularity only sheds sqrt(gap) per halving, so the
  // default tolerance is the right ask; 1e-10 is beyond double refinement.
  ImproperResult r = improper_integral(
      [](double u) { return 1.0 / std::sqrt(u * (2.0 - u)); }, 1.0, 2.0);
  CHECK(r.verdict == ImproperVerdict::Finite);
  CHECK(r.value == doctest::Approx(std::acos(-1.0) / 2).epsilon(1e-6));
}
