#pragma once

#include <string>
#include <vector>

#include "rwdiff/temporal.hpp"
#include "rwdiff/vec.hpp"

namespace rwdiff {

enum class FiberKind { Euclidean, Hyperbolic, Spherical };

struct Fiber {
  FiberKind kind = FiberKind::Euclidean;
  int d = 3;
  int kappa = 0;        // curvature: 0, -1, +1
  int ambient_dim = 3;  // d (flat) or d+1 (curved)
};

Fiber make_fiber(FiberKind kind, int d);

// Position x and unit direction Theta = xdot/|xdot| in ambient Cartesian
// coordinates.  Flat: |Theta| = 1.  Sphere: |x| = |Theta| = 1, <x,Theta> = 0.
// Hyperboloid (upper sheet in Minkowski R^{1,d}): q(x,x) = -1 with x0 > 0,
// q(Theta,Theta) = 1, q(x,Theta) = 0.
struct SpatialState {
  Vec x, theta;
};

// Canonical start: base point of the fiber, direction along the first
// spatial axis.
SpatialState default_spatial_init(const Fiber& f);

// Maximum constraint residual (manifold + tangency + normalization).  On the
// hyperboloid the residual is relative to x0^2, since the Minkowski brackets
// of an exactly-constrained point already carry rounding noise eps x0^2.
double constraint_residual(const SpatialState& sp, const Fiber& f);

enum class SpatialStatus { Ok, DegenerateVelocity, Failure };

struct SpatialStepOutcome {
  SpatialState state;
  SpatialStatus status = SpatialStatus::Ok;
  double rot_cos = 1, rot_sin = 0;  // per-step transport angle (curved fibers)
};

// Advance (x, Theta) over [before.s, after.s].  Spatial speed v = a/alpha^2
// and clock density g = sigma^2/(tdot^2 - 1) are taken at `before`.  The
// deterministic geodesic transport of (x, Theta) is applied exactly over the
// substep (rotation by v h on the sphere, boost on the hyperboloid; the
// first-order x' = x + v Theta h, Theta' = Theta - kappa x v h is its O(h^2)
// linearization), then the Euler mean-reversion drift -((d-1)/2) g Theta h
// and tangent noise with covariance g h times the metric projector onto the
// complement of span{x, Theta}, then projection back to the constraint set.
// `noise` must hold ambient_dim standard normal draws.
SpatialStepOutcome step_spatial(const SpatialState& sp,
                                const TemporalState& before,
                                const TemporalState& after, const Fiber& fiber,
                                const StepParams& p, const double* noise);

// One tangent-noise draw with covariance equal to the fiber-metric projector
// onto the complement of span{x, Theta}: Euclidean projection of an ambient
// standard normal on R^d and S^d, a sum over a q-orthonormal basis of the
// complement on the hyperboloid (where naive projection has the wrong
// covariance).  `xi` holds ambient_dim standard normal draws.
Vec projector_noise(const SpatialState& sp, const Fiber& f, const double* xi);

struct ProjectOutcome {
  SpatialState state;
  bool ok = true;
};

ProjectOutcome project_to_manifold(const Vec& x, const Vec& theta,
                                   const Fiber& fiber);

struct SpatialSample {
  double s = 0;
  Vec x, theta;
  // cos/sin of the accumulated conformal phase A_s, maintained by exact
  // angle-addition alongside the applied rotations (the raw double A_s loses
  // all phase information once it exceeds 2 pi / machine epsilon).
  double cosA = 1, sinA = 0;
};

struct Trajectory {
  TemporalPath temporal;
  std::vector<SpatialSample> spatial;  // aligned with temporal.samples
  Fiber fiber;
};

Trajectory simulate_full(TemporalState init_t, SpatialState init_s,
                         const ExpansionModel& m, const Fiber& fiber,
                         const StepParams& p, double s_max, Rng& rng,
                         int thin = 1);

struct PolarDiagnostics {
  double r = 0;
  Vec theta_unit;        // radial direction x_vec / r
  double c_over_a = 0;   // radial share of the velocity
  double rho_over_r = 0; // angular share; (c/a)^2 + (rho/r)^2 = 1
};

// Hyperbolic fiber only; errors when r < 1e-8 (radial split ill-conditioned).
PolarDiagnostics polar_diagnostics(const SpatialState& sp,
                                   const TemporalState& ts,
                                   const ExpansionModel& m);

struct BoundaryPoint {
  enum class Kind {
    FiberPoint,
    NullDirection,
    GreatCircle,
    TimelikeApex,
    Unconverged
  };
  Kind kind = Kind::Unconverged;
  Vec x_inf, theta_inf, U, V;
  double delta_inf = 0;
  double certificate = 0;  // remaining-variation bound or tail deviation
  std::string diagnostics;
};

const char* to_string(BoundaryPoint::Kind k);

BoundaryPoint boundary_limit(const Trajectory& traj, const ExpansionModel& m,
                             const Fiber& fiber, double tol_tail = 1e-2);

}  // namespace rwdiff
