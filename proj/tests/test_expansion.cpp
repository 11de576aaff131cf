#include <cmath>

#include "doctest.h"
#include "rwdiff/expansion.hpp"

using namespace rwdiff;

TEST_CASE("catalog closed forms at probe points") {
  ExpansionModel c = catalog("constant");
  CHECK(c.alpha(3.7) == 1.0);
  CHECK(c.H(3.7) == 0.0);

  ExpansionModel p2 = catalog("power", {2});
  CHECK(p2.alpha(1.5) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(p2.alpha_prime(1.5) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p2.H(1.5) == doctest::Approx(2.0 / 1.5).epsilon(1e-15));

  ExpansionModel sh = catalog("sinh");
  CHECK(sh.alpha(1.2) == doctest::Approx(std::sinh(1.2)).epsilon(1e-15));
  CHECK(sh.H(1.2) == doctest::Approx(1.0 / std::tanh(1.2)).epsilon(1e-14));

  ExpansionModel ex = catalog("exp", {1.5});
  CHECK(ex.alpha(2.0) == doctest::Approx(std::exp(3.0)).epsilon(1e-15));
  CHECK(ex.H(100.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(ex.log_alpha(400.0) == doctest::Approx(600.0).epsilon(1e-15));

  ExpansionModel pe = catalog("power_exp", {1, 0.5});
  // alpha = t exp(sqrt(t)); H = 1/t + 1/(2 sqrt(t)).
  CHECK(pe.alpha(4.0) == doctest::Approx(4.0 * std::exp(2.0)).epsilon(1e-15));
  CHECK(pe.H(4.0) == doctest::Approx(0.25 + 0.25).epsilon(1e-14));

  ExpansionModel bc = catalog("big_crunch_radiation");
  CHECK(bc.T == doctest::Approx(2.0));
  CHECK(bc.alpha(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bc.alpha(0.5) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
}

TEST_CASE("growth classification across the catalog") {
  CHECK(classify_growth(catalog("constant")).kind == GrowthClass::Polynomial);
  GrowthClass g = classify_growth(catalog("power", {2}));
  CHECK(g.kind == GrowthClass::Polynomial);
  CHECK(g.value == doctest::Approx(2.0).epsilon(1e-2));
  g = classify_growth(catalog("exp", {1}));
  CHECK(g.kind == GrowthClass::Exponential);
  CHECK(g.value == doctest::Approx(1.0).epsilon(1e-3));
  g = classify_growth(catalog("sinh"));
  CHECK(g.kind == GrowthClass::Exponential);
  CHECK(g.value == doctest::Approx(1.0).epsilon(1e-3));
  g = classify_growth(catalog("power_exp", {0, 0.5}));
  CHECK(g.kind == GrowthClass::Subexponential);
  CHECK(classify_growth(catalog("big_crunch_radiation")).kind ==
        GrowthClass::BigCrunch);
}

TEST_CASE("horizon integrals against closed forms") {
  // sinh, from c0 = 1: int_1^inf du/sinh(u) = -log tanh(1/2).
  HorizonIntegrals hz = horizon_integrals(catalog("sinh"));
  CHECK(hz.i_minus == kInf);  // 1/sinh ~ 1/u at 0
  CHECK(hz.i_plus == doctest::Approx(0.77193683290530479).epsilon(1e-6));

  // t exp(sqrt t), upward from 1: substitution u = sqrt(t) gives 2 E1(1).
  hz = horizon_integrals(catalog("power_exp", {1, 0.5}));
  CHECK(hz.i_minus == kInf);
  CHECK(hz.i_plus == doctest::Approx(0.43876786879104102).epsilon(1e-6));

  // Radiation crunch: int_0^1 and int_1^2 of 1/sqrt(t(2-t)) are both pi/2.
  hz = horizon_integrals(catalog("big_crunch_radiation"));
  CHECK(hz.i_minus == doctest::Approx(std::acos(-1.0) / 2).epsilon(1e-6));
  CHECK(hz.i_plus == doctest::Approx(std::acos(-1.0) / 2).epsilon(1e-6));

  hz = horizon_integrals(catalog("power", {2}));
  CHECK(hz.i_minus == kInf);
  CHECK(hz.i_plus == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("conformal time, including the wide-range log substitution") {
  ExpansionModel p1 = catalog("power", {1});
  CHECK(conformal_time(p1, 1.0, 10.0) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-9));
  // 60 decades: must route through the log-substituted quadrature.
  CHECK(conformal_time(p1, 1.0, 1e60) ==
        doctest::Approx(60.0 * std::log(10.0)).epsilon(1e-9));
  ExpansionModel c = catalog("constant");
  CHECK(conformal_time(c, 2.0, 5.0) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("H-power integrability brackets the transience threshold") {
  // H ~ beta t^{beta-1}: H^3 integrable iff beta < 2/3.
  CHECK(h_power_integrable(catalog("power_exp", {0, 0.5}), 3.0) ==
        Ternary::Yes);
  CHECK(h_power_integrable(catalog("power_exp", {0, 0.8}), 3.0) ==
        Ternary::No);
}

TEST_CASE("hypotheses report accepts the catalog") {
  for (const char* name : {"constant", "sinh", "big_crunch_radiation"}) {
    HypothesesReport r = check_hypotheses(catalog(name));
    CHECK(r.all_pass());
  }
  CHECK(check_hypotheses(catalog("big_crunch_radiation")).case_b);
}

TEST_CASE("regime predictions per family") {
  using T = RegimePrediction::Tdot;
  using D = RegimePrediction::Direction;
  using P = RegimePrediction::Position;

  RegimePrediction p = predict_regimes(catalog("exp", {1}), 0, 3, 1.0);
  CHECK(p.tdot_behavior == T::HarrisRecurrent);
  CHECK(p.invariant_H == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(!p.clock_convergent);
  CHECK(p.direction_behavior == D::RecurrentSphericalBM);

  p = predict_regimes(catalog("power", {2.0 / 3.0}), 0, 3, 1.0);
  CHECK(p.tdot_behavior == T::Transient);
  CHECK(p.clock_convergent);

  p = predict_regimes(catalog("power", {1}), -1, 3, 1.0);
  CHECK(p.position_behavior == P::EscapesAlongHypersurface);

  p = predict_regimes(catalog("constant"), 1, 3, 1.0);
  CHECK(p.position_behavior == P::GreatCircle);

  p = predict_regimes(catalog("sinh"), -1, 3, 1.0);
  CHECK(p.position_behavior == P::ConvergesInFiber);

  p = predict_regimes(catalog("big_crunch_radiation"), 1, 3, 1.0);
  CHECK(p.tdot_behavior == T::FiniteLifetimeDivergent);
  CHECK(p.lifetime_finite);
  CHECK(p.clock_convergent);

  p = predict_regimes(catalog("power_exp", {0, 0.5}), 0, 3, 1.0);
  CHECK(p.tdot_behavior == T::TransientInProbability);
  CHECK(p.as_transient);
  p = predict_regimes(catalog("power_exp", {0, 0.8}), 0, 3, 1.0);
  CHECK(p.tdot_behavior == T::TransientInProbability);
  CHECK(!p.as_transient);
}

TEST_CASE("tabulated model interpolates a power law") {
  std::vector<double> t, a;
  for (int i = 0; i <= 40; ++i) {
    double x = 0.5 + 0.1 * i;
    t.push_back(x);
    a.push_back(x * x);
  }
  ExpansionModel m = tabulated_model(t, a);
  CHECK(m.alpha(1.23) == doctest::Approx(1.23 * 1.23).epsilon(1e-3));
  CHECK(m.H(2.0) == doctest::Approx(1.0).epsilon(5e-2));
}

TEST_CASE("catalog rejects unknown families") {
  CHECK_THROWS(catalog("nosuch"));
  CHECK_THROWS(catalog("power", {}));  // missing exponent
}
