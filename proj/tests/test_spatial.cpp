#include <cmath>

#include "doctest.h"
#include "rwdiff/spatial.hpp"

using namespace rwdiff;

namespace {

// Minkowski bracket matching the hyperboloid convention.
double q(const Vec& a, const Vec& b) { return mdot(a, b); }

TemporalState state_with(double b, double alpha, double s) {
  TemporalState st;
  st.s = s;
  st.b = b;
  st.log_alpha = std::log(alpha);
  st.alpha = alpha;
  st.a = b * alpha;
  st.tdot = std::hypot(1.0, b);
  return st;
}

}  // namespace

TEST_CASE("fiber construction") {
  Fiber f = make_fiber(FiberKind::Euclidean, 3);
  CHECK(f.ambient_dim == 3);
  CHECK(f.kappa == 0);
  f = make_fiber(FiberKind::Hyperbolic, 3);
  CHECK(f.ambient_dim == 4);
  CHECK(f.kappa == -1);
  f = make_fiber(FiberKind::Spherical, 4);
  CHECK(f.ambient_dim == 5);
  CHECK_THROWS(make_fiber(FiberKind::Euclidean, 2));
}

TEST_CASE("default states satisfy the constraints exactly") {
  for (auto kind :
       {FiberKind::Euclidean, FiberKind::Hyperbolic, FiberKind::Spherical}) {
    Fiber f = make_fiber(kind, 3);
    CHECK(constraint_residual(default_spatial_init(f), f) < 1e-15);
  }
}

TEST_CASE("frozen one-step oracle on the flat fiber") {
  // v = 0.5, g = 2, h = 0.01, d = 3, x = (0.1,0.2,0.3), theta = (0.6,0.8,0),
  // noise xi = (0.3,-0.2,0.4).  Transport: x' = x + v h theta.  Then
  // theta <- (1 - g h) theta + sqrt(g h) P_{theta-perp} xi, normalized.
  Fiber f = make_fiber(FiberKind::Euclidean, 3);
  SpatialState sp;
  sp.x = Vec(3);
  sp.theta = Vec(3);
  sp.x[0] = 0.1;
  sp.x[1] = 0.2;
  sp.x[2] = 0.3;
  sp.theta[0] = 0.6;
  sp.theta[1] = 0.8;
  // b = 0.5 and alpha = 1 give v = b/alpha^2 = 0.5; g = sigma^2/b^2 = 2
  // requires sigma = sqrt(0.5).
  TemporalState before = state_with(0.5, 1.0, 0.0);
  TemporalState after = state_with(0.5, 1.0, 0.01);
  StepParams p;
  p.sigma = std::sqrt(0.5);
  p.d = 3;
  double noise[3] = {0.3, -0.2, 0.4};
  SpatialStepOutcome o = step_spatial(sp, before, after, f, p, noise);
  REQUIRE(o.status == SpatialStatus::Ok);
  CHECK(o.state.x[0] == doctest::Approx(0.103).epsilon(1e-15));
  CHECK(o.state.x[1] == doctest::Approx(0.204).epsilon(1e-15));
  CHECK(o.state.x[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(o.state.theta[0] ==
        doctest::Approx(0.639634700071857807).epsilon(1e-14));
  CHECK(o.state.theta[1] ==
        doctest::Approx(0.766521675717244587).epsilon(1e-14));
  CHECK(o.state.theta[2] ==
        doctest::Approx(0.0575497273634883260).epsilon(1e-14));
}

TEST_CASE("sphere step with sigma = 0 is the exact rotation") {
  Fiber f = make_fiber(FiberKind::Spherical, 3);
  SpatialState sp = default_spatial_init(f);
  TemporalState before = state_with(2.0, 1.0, 0.0);
  TemporalState after = state_with(2.0, 1.0, 0.5);
  StepParams p;
  p.sigma = 0;
  SpatialStepOutcome o = step_spatial(sp, before, after, f, p, nullptr);
  double phi = 2.0 * 0.5;  // v h = (b/alpha^2)(after.s - before.s)
  CHECK(o.rot_cos == doctest::Approx(std::cos(phi)).epsilon(1e-15));
  CHECK(o.rot_sin == doctest::Approx(std::sin(phi)).epsilon(1e-15));
  CHECK(o.state.x[0] == doctest::Approx(std::cos(phi)).epsilon(1e-14));
  CHECK(o.state.x[1] == doctest::Approx(std::sin(phi)).epsilon(1e-14));
  CHECK(constraint_residual(o.state, f) < 1e-14);
}

TEST_CASE("hyperboloid step with sigma = 0 matches the ambient boost") {
  Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
  // Generic point: chi = 0.7 along n = e1, mixed tangent.
  double chi = 0.7, tr = 0.6, w = 0.8;
  SpatialState sp;
  sp.x = Vec(4);
  sp.theta = Vec(4);
  sp.x[0] = std::cosh(chi);
  sp.x[1] = std::sinh(chi);
  sp.theta[0] = tr * std::sinh(chi);
  sp.theta[1] = tr * std::cosh(chi);
  sp.theta[2] = w;
  REQUIRE(constraint_residual(sp, f) < 1e-15);
  TemporalState before = state_with(0.8, 1.0, 0.0);
  TemporalState after = state_with(0.8, 1.0, 0.25);
  StepParams p;
  p.sigma = 0;
  SpatialStepOutcome o = step_spatial(sp, before, after, f, p, nullptr);
  double phi = 0.8 * 0.25;
  for (int i = 0; i < 4; ++i) {
    double xe = std::cosh(phi) * sp.x[i] + std::sinh(phi) * sp.theta[i];
    double te = std::sinh(phi) * sp.x[i] + std::cosh(phi) * sp.theta[i];
    CHECK(o.state.x[i] == doctest::Approx(xe).epsilon(1e-12));
    CHECK(o.state.theta[i] == doctest::Approx(te).epsilon(1e-12));
  }
  CHECK(constraint_residual(o.state, f) < 1e-14);
}

TEST_CASE("projector noise has zero component along the frozen directions") {
  Rng rng(3, 0);
  double xi[8];
  SUBCASE("flat") {
    Fiber f = make_fiber(FiberKind::Euclidean, 4);
    SpatialState sp = default_spatial_init(f);
    for (int k = 0; k < 50; ++k) {
      for (int i = 0; i < f.ambient_dim; ++i) xi[i] = rng.normal();
      Vec wv = projector_noise(sp, f, xi);
      CHECK(std::fabs(dot(wv, sp.theta)) < 1e-13);
    }
  }
  SUBCASE("sphere") {
    Fiber f = make_fiber(FiberKind::Spherical, 3);
    SpatialState sp = default_spatial_init(f);
    for (int k = 0; k < 50; ++k) {
      for (int i = 0; i < f.ambient_dim; ++i) xi[i] = rng.normal();
      Vec wv = projector_noise(sp, f, xi);
      CHECK(std::fabs(dot(wv, sp.theta)) < 1e-13);
      CHECK(std::fabs(dot(wv, sp.x)) < 1e-13);
    }
  }
  SUBCASE("hyperboloid") {
    Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
    SpatialState sp;
    sp.x = Vec(4);
    sp.theta = Vec(4);
    double chi = 0.9;
    sp.x[0] = std::cosh(chi);
    sp.x[2] = std::sinh(chi);
    sp.theta[0] = std::sinh(chi);
    sp.theta[2] = std::cosh(chi);
    for (int k = 0; k < 50; ++k) {
      for (int i = 0; i < f.ambient_dim; ++i) xi[i] = rng.normal();
      Vec wv = projector_noise(sp, f, xi);
      CHECK(std::fabs(q(wv, sp.theta)) < 1e-12);
      CHECK(std::fabs(q(wv, sp.x)) < 1e-12);
      CHECK(q(wv, wv) >= -1e-12);  // spacelike
    }
  }
}

TEST_CASE("projection restores perturbed states; degenerate inputs rejected") {
  Fiber fs = make_fiber(FiberKind::Spherical, 3);
  SpatialState sp = default_spatial_init(fs);
  Vec x = sp.x, th = sp.theta;
  x[1] += 1e-3;
  th[0] += 2e-3;
  ProjectOutcome o = project_to_manifold(x, th, fs);
  REQUIRE(o.ok);
  CHECK(constraint_residual(o.state, fs) < 1e-14);
  // theta parallel to x cannot be projected to a tangent.
  CHECK(!project_to_manifold(x, x, fs).ok);

  Fiber fh = make_fiber(FiberKind::Hyperbolic, 3);
  Vec bad(4);
  bad[1] = 2.0;  // spacelike "position"
  CHECK(!project_to_manifold(bad, th, fh).ok);
}

TEST_CASE("hyperboloid long runs stay constrained at astronomical radius") {
  // Escape regime: chi grows linearly in s; ambient double arithmetic dies
  // at chi ~ 18, the polar representation must not.
  ExpansionModel m = catalog("power", {1});
  Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
  StepParams p;
  p.sigma = 1;
  p.d = 3;
  p.ds = 1e-3;
  Rng rng(2, 0);
  Trajectory traj = simulate_full(make_temporal_state(0, 1, 1, m),
                                  default_spatial_init(f), m, f, p, 120.0,
                                  rng, 100);
  REQUIRE(traj.temporal.terminated == Termination::ProperTimeBudget);
  const SpatialSample& last = traj.spatial.back();
  CHECK(last.x[0] > 1e15);  // genuinely past the ambient cancellation wall
  SpatialState sp;
  sp.x = last.x;
  sp.theta = last.theta;
  CHECK(constraint_residual(sp, f) < 1e-12);
  PolarDiagnostics pd = polar_diagnostics(sp, TemporalState{}, m);
  CHECK(pd.c_over_a <= 1.0);
  CHECK(pd.c_over_a > 0.9);
  CHECK(pd.c_over_a * pd.c_over_a + pd.rho_over_r * pd.rho_over_r ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sphere phase tracking matches the applied rotations") {
  // sigma = 0 on S^3 with alpha == 1: x_s = cos(A_s) x_0 + sin(A_s) theta_0
  // exactly, with A_s the accumulated angle.
  ExpansionModel m = catalog("constant");
  Fiber f = make_fiber(FiberKind::Spherical, 3);
  StepParams p;
  p.sigma = 0;
  p.d = 3;
  p.ds = 1e-3;
  Rng rng(0, 0);
  SpatialState sp0 = default_spatial_init(f);
  Trajectory traj =
      simulate_full(make_temporal_state(0, 1, 2, m), sp0, m, f, p, 50.0, rng,
                    100);
  const SpatialSample& last = traj.spatial.back();
  CHECK(last.cosA * last.cosA + last.sinA * last.sinA ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) {
    CHECK(last.x[i] == doctest::Approx(last.cosA * sp0.x[i] +
                                       last.sinA * sp0.theta[i])
                           .epsilon(1e-9));
  }
}

TEST_CASE("polar diagnostics demand a usable radius") {
  ExpansionModel m = catalog("constant");
  Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
  SpatialState apex = default_spatial_init(f);
  CHECK_THROWS(polar_diagnostics(apex, TemporalState{}, m));
}

TEST_CASE("boundary extraction across the three regimes") {
  StepParams p;
  p.sigma = 1;
  p.d = 3;
  p.ds = 1e-3;

  SUBCASE("finite future horizon: fiber point with certificate") {
    ExpansionModel m = catalog("sinh");
    Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
    Rng rng(7, 0);
    Trajectory traj = simulate_full(make_temporal_state(0, 1, 1, m),
                                    default_spatial_init(f), m, f, p, 50.0,
                                    rng, 100);
    BoundaryPoint bp = boundary_limit(traj, m, f, 1e-2);
    CHECK(bp.kind == BoundaryPoint::Kind::FiberPoint);
    CHECK(bp.certificate < 1e-3);
  }
  SUBCASE("flat escape: null direction") {
    // s_max = 20 keeps t_end ~ 5e9: delta is the difference of the conformal
    // time and <x, theta>, both ~ t_end, so past t ~ 1e14 double subtraction
    // can no longer resolve it to the 1e-2 tolerance.
    ExpansionModel m = catalog("constant");
    Fiber f = make_fiber(FiberKind::Euclidean, 3);
    Rng rng(7, 0);
    Trajectory traj = simulate_full(make_temporal_state(0, 1, 1, m),
                                    default_spatial_init(f), m, f, p, 20.0,
                                    rng, 100);
    BoundaryPoint bp = boundary_limit(traj, m, f, 1e-2);
    CHECK(bp.kind == BoundaryPoint::Kind::NullDirection);
    CHECK(norm(bp.theta_inf) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("too few samples: unconverged") {
    Trajectory traj;
    traj.fiber = make_fiber(FiberKind::Euclidean, 3);
    BoundaryPoint bp =
        boundary_limit(traj, catalog("constant"), traj.fiber, 1e-2);
    CHECK(bp.kind == BoundaryPoint::Kind::Unconverged);
  }
}
