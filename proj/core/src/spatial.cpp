#include "rwdiff/spatial.hpp"

#include <algorithm>
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

// ---------------------------------------------------------------------------
// Hyperboloid in polar form.
//
// Ambient coordinates x = (cosh chi, sinh chi nhat) become useless long before
// overflow: every Minkowski bracket between near-null vectors of size e^chi
// cancels to q ~ O(1), so the absolute rounding error eps e^{2 chi} destroys
// the constraint once chi > ~18 (x0 > ~1e8).  In the escape regimes chi grows
// linearly in s, so the long-run integrator instead carries
//   chi            geodesic distance from the apex,
//   nhat  in S^{d-1}  radial direction (unit vector in R^d),
//   (tr, w)        the unit tangent Theta split over the q-orthonormal frame
//                  {e_chi, (0, e_i)} with e_i | nhat:  tr^2 + |w|^2 = 1.
// In this frame the induced metric is Euclidean, the constraints are satisfied
// identically, and the exact geodesic flow has a closed form whose e^{chi}
// growth factors out analytically (all formulas below are written with
// cosh/sinh scaled by e^{-chi}), so it is stable for arbitrarily large chi.
struct HypPolar {
  double chi = 0;
  Vec n;        // R^d, |n| = 1
  double tr = 0;
  Vec w;        // R^d, w | n, tr^2 + |w|^2 = 1
};

HypPolar hyp_from_ambient(const SpatialState& sp, const Fiber& f) {
  int d = f.d;
  HypPolar hp;
  hp.n = Vec(d);
  hp.w = Vec(d);
  double r2 = 0;
  for (int i = 0; i < d; ++i) r2 += sp.x[i + 1] * sp.x[i + 1];
  double r = std::sqrt(r2);
  hp.chi = std::asinh(r);
  double ch = std::sqrt(1.0 + r2);
  if (r > 0) {
    for (int i = 0; i < d; ++i) hp.n[i] = sp.x[i + 1] / r;
  } else {
    // At the apex the radial direction is free; seed it from Theta.
    double tn = 0;
    for (int i = 0; i < d; ++i) tn += sp.theta[i + 1] * sp.theta[i + 1];
    tn = std::sqrt(tn);
    if (tn > 0) {
      for (int i = 0; i < d; ++i) hp.n[i] = sp.theta[i + 1] / tn;
    } else {
      hp.n[0] = 1.0;
    }
  }
  // Frame split of Theta; the e_chi bracket kills any x-component, so this is
  // also the tangency projection.
  double tn = 0;
  for (int i = 0; i < d; ++i) tn += sp.theta[i + 1] * hp.n[i];
  hp.tr = -sp.theta[0] * r + tn * ch;
  for (int i = 0; i < d; ++i) hp.w[i] = sp.theta[i + 1] - tn * hp.n[i];
  double nn = std::hypot(hp.tr, norm(hp.w));
  if (nn > 0) {
    hp.tr /= nn;
    hp.w *= 1.0 / nn;
  } else {
    hp.tr = 1.0;
  }
  return hp;
}

SpatialState hyp_to_ambient(const HypPolar& hp, const Fiber& f) {
  int d = f.d;
  SpatialState sp;
  sp.x = Vec(d + 1);
  sp.theta = Vec(d + 1);
  double ch = std::cosh(hp.chi), sh = std::sinh(hp.chi);
  sp.x[0] = ch;
  sp.theta[0] = hp.tr * sh;
  for (int i = 0; i < d; ++i) {
    sp.x[i + 1] = sh * hp.n[i];
    sp.theta[i + 1] = hp.tr * ch * hp.n[i] + hp.w[i];
  }
  return sp;
}

// Exact geodesic flow by arc length phi.  With E = e^{-chi}, C = cosh(chi) E,
// S = sinh(chi) E and p = |w|:
//   cosh chi' E = cosh(phi) C + tr sinh(phi) S            (no cancellation:
//   sinh chi' E = hypot(cosh(phi) S + tr sinh(phi) C,      both halves of the
//                       E sinh(phi) p)                     cosh stay positive)
//   tr'  = (sinh(phi) C + tr cosh(phi) S) / (sinh chi' E)
//   p'   = p S / (sinh chi' E)                       (Clairaut: p sinh chi is
// conserved), and the frame plane {nhat, what} rotates by the polar angle the
// geodesic sweeps: cos beta, sin beta as below.
void hyp_transport(HypPolar& hp, double phi) {
  double e2 = std::exp(-2.0 * hp.chi);
  double C = 0.5 * (1.0 + e2);
  double S = -0.5 * std::expm1(-2.0 * hp.chi);
  double cph = std::cosh(phi), sph = std::sinh(phi);
  double p = norm(hp.w);
  double cbar = cph * C + sph * hp.tr * S;
  double abar = cph * S + sph * hp.tr * C;
  double wbar = std::exp(-hp.chi) * sph * p;
  double rbar = std::hypot(abar, wbar);
  if (!(rbar > 0)) {
    // Landed exactly on the apex (measure zero): keep the frame, chi' = 0.
    hp.chi = 0;
    return;
  }
  double chi_new = hp.chi + std::log(cbar + rbar);
  double tr_new = (sph * C + cph * hp.tr * S) / rbar;
  double p_new = p * S / rbar;
  double cosb = abar / rbar, sinb = wbar / rbar;
  int d = hp.n.size();
  if (p > 0) {
    Vec what = (1.0 / p) * hp.w;
    for (int i = 0; i < d; ++i) {
      double ni = cosb * hp.n[i] + sinb * what[i];
      hp.w[i] = p_new * (cosb * what[i] - sinb * hp.n[i]);
      hp.n[i] = ni;
    }
  } else {
    // Radial geodesic: the direction flips if it passed through the apex.
    if (cosb < 0) hp.n *= -1.0;
  }
  hp.chi = chi_new;
  hp.tr = tr_new;
}

// Mean reversion plus tangent noise in frame coordinates.  A standard normal
// on the frame (radial slot xi[0], transverse slot the projection of
// xi[1..d] off nhat) minus its Theta-component has exactly the projector
// covariance of projector_noise, with only O(1) arithmetic.
bool hyp_kick(HypPolar& hp, int d, double decay, double amp, const double* xi) {
  Vec u(d);
  for (int i = 0; i < d; ++i) u[i] = xi[i + 1];
  double un = dot(u, hp.n);
  for (int i = 0; i < d; ++i) u[i] -= un * hp.n[i];
  double vr = xi[0];
  double vt = vr * hp.tr + dot(u, hp.w);
  vr -= vt * hp.tr;
  for (int i = 0; i < d; ++i) u[i] -= vt * hp.w[i];
  hp.tr = decay * hp.tr + amp * vr;
  for (int i = 0; i < d; ++i) hp.w[i] = decay * hp.w[i] + amp * u[i];
  // Re-impose the frame constraints (w | n, unit tangent, unit n).
  double wn = dot(hp.w, hp.n);
  for (int i = 0; i < d; ++i) hp.w[i] -= wn * hp.n[i];
  double nn = std::hypot(hp.tr, norm(hp.w));
  if (!(nn > 1e-12) || !std::isfinite(nn)) return false;
  hp.tr /= nn;
  hp.w *= 1.0 / nn;
  double nl = norm(hp.n);
  if (!(nl > 0) || !std::isfinite(nl)) return false;
  hp.n *= 1.0 / nl;
  return true;
}

bool hyp_finite(const HypPolar& hp) {
  if (!std::isfinite(hp.chi) || !std::isfinite(hp.tr)) return false;
  for (int i = 0; i < hp.n.size(); ++i) {
    if (!std::isfinite(hp.n[i]) || !std::isfinite(hp.w[i])) return false;
  }
  return true;
}

// Shared by step_spatial and the long-run loop in simulate_full.
SpatialStatus hyp_step(HypPolar& hp, const TemporalState& before,
                       const TemporalState& after, const Fiber& fiber,
                       const StepParams& p, const double* noise) {
  double h = after.s - before.s;
  double b = before.b;
  hyp_transport(hp, b * std::exp(-before.log_alpha) * h);
  SpatialStatus st = SpatialStatus::Ok;
  if (p.sigma > 0) {
    if (b <= 0) {
      st = SpatialStatus::DegenerateVelocity;
    } else {
      double g = p.sigma * p.sigma / (b * b);
      double decay = 1.0 - 0.5 * (fiber.d - 1) * g * h;
      if (!hyp_kick(hp, fiber.d, decay, std::sqrt(g * h), noise)) {
        return SpatialStatus::Failure;
      }
    }
  }
  if (!hyp_finite(hp)) return SpatialStatus::Failure;
  return st;
}

}  // namespace

// On R^d and S^d this is plain orthogonal projection of an ambient standard
// normal.  On the hyperboloid, projecting an ambient normal does NOT
// reproduce the Minkowski bracket eta + x x^T - theta theta^T; instead the
// noise is assembled over a q-orthonormal basis {f_i} of the complement, for
// which the completeness relation
// eta^{-1} = -x x^T + theta theta^T + sum f_i f_i^T
// gives exactly the required covariance.
Vec projector_noise(const SpatialState& sp, const Fiber& f, const double* xi) {
  int n = f.ambient_dim;
  if (f.kind == FiberKind::Euclidean || f.kind == FiberKind::Spherical) {
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = xi[i];
    if (f.kind == FiberKind::Spherical) {
      double wx = dot(w, sp.x);
      for (int i = 0; i < n; ++i) w[i] -= wx * sp.x[i];
    }
    double wt = dot(w, sp.theta);
    for (int i = 0; i < n; ++i) w[i] -= wt * sp.theta[i];
    return w;
  }
  // Hyperboloid: Gram-Schmidt in the Minkowski form over the coordinate
  // basis, seeded with the q-projection off {x, theta}.
  Vec basis[Vec::kCap];
  int nb = 0;
  for (int e = 0; e < n && nb < f.d - 1; ++e) {
    Vec w(n);
    w[e] = 1.0;
    double qx = mdot(w, sp.x);
    double qt = mdot(w, sp.theta);
    for (int i = 0; i < n; ++i) w[i] += qx * sp.x[i] - qt * sp.theta[i];
    for (int j = 0; j < nb; ++j) {
      double c = mdot(w, basis[j]);
      for (int i = 0; i < n; ++i) w[i] -= c * basis[j][i];
    }
    double nn = mdot(w, w);
    if (nn > 1e-10) {
      double inv = 1.0 / std::sqrt(nn);
      for (int i = 0; i < n; ++i) w[i] *= inv;
      basis[nb++] = w;
    }
  }
  Vec out(n);
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < n; ++i) out[i] += xi[j] * basis[j][i];
  }
  return out;
}

Fiber make_fiber(FiberKind kind, int d) {
  if (d < 3) throw std::invalid_argument("fiber dimension must be >= 3");
  Fiber f;
  f.kind = kind;
  f.d = d;
  switch (kind) {
    case FiberKind::Euclidean:
      f.kappa = 0;
      f.ambient_dim = d;
      break;
    case FiberKind::Hyperbolic:
      f.kappa = -1;
      f.ambient_dim = d + 1;
      break;
    case FiberKind::Spherical:
      f.kappa = 1;
      f.ambient_dim = d + 1;
      break;
  }
  return f;
}

SpatialState default_spatial_init(const Fiber& f) {
  SpatialState sp;
  sp.x = Vec(f.ambient_dim);
  sp.theta = Vec(f.ambient_dim);
  if (f.kind == FiberKind::Euclidean) {
    sp.theta[0] = 1.0;
  } else {
    sp.x[0] = 1.0;
    sp.theta[1] = 1.0;
  }
  return sp;
}

double constraint_residual(const SpatialState& sp, const Fiber& f) {
  switch (f.kind) {
    case FiberKind::Euclidean:
      return std::fabs(norm(sp.theta) - 1.0);
    case FiberKind::Spherical: {
      double r = std::fabs(norm(sp.x) - 1.0);
      r = std::fmax(r, std::fabs(norm(sp.theta) - 1.0));
      return std::fmax(r, std::fabs(dot(sp.x, sp.theta)));
    }
    case FiberKind::Hyperbolic: {
      // Relative to x0^2: the brackets are O(1) differences of O(e^{2 chi})
      // products, so the absolute residual of an exactly-constrained point
      // still carries rounding noise eps x0^2.
      double scale = std::fmax(1.0, sp.x[0] * sp.x[0]);
      double r = std::fabs(mdot(sp.x, sp.x) + 1.0);
      r = std::fmax(r, std::fabs(mdot(sp.theta, sp.theta) - 1.0));
      r = std::fmax(r, std::fabs(mdot(sp.x, sp.theta)));
      return r / scale;
    }
  }
  return 0;
}

ProjectOutcome project_to_manifold(const Vec& x, const Vec& theta,
                                   const Fiber& fiber) {
  ProjectOutcome out;
  out.state.x = x;
  out.state.theta = theta;
  int n = fiber.ambient_dim;
  switch (fiber.kind) {
    case FiberKind::Euclidean: {
      double nt = norm(theta);
      if (!(nt > 0) || !std::isfinite(nt)) {
        out.ok = false;
        return out;
      }
      out.state.theta *= 1.0 / nt;
      return out;
    }
    case FiberKind::Spherical: {
      double nx = norm(x);
      if (!(nx > 0)) {
        out.ok = false;
        return out;
      }
      out.state.x *= 1.0 / nx;
      double tx = dot(out.state.theta, out.state.x);
      for (int i = 0; i < n; ++i) out.state.theta[i] -= tx * out.state.x[i];
      double nt = norm(out.state.theta);
      if (!(nt > 1e-12)) {
        out.ok = false;  // theta parallel to x: tangency unrecoverable
        return out;
      }
      out.state.theta *= 1.0 / nt;
      return out;
    }
    case FiberKind::Hyperbolic: {
      double q = mdot(x, x);
      if (!(q < 0) || x[0] <= 0) {
        out.ok = false;
        return out;
      }
      out.state.x *= 1.0 / std::sqrt(-q);
      double qt = mdot(out.state.theta, out.state.x);
      // Remove the x-component: theta - q(theta,x)/q(x,x) x = theta + q(theta,x) x.
      for (int i = 0; i < n; ++i) out.state.theta[i] += qt * out.state.x[i];
      double nt = mdot(out.state.theta, out.state.theta);
      if (!(nt > 1e-12)) {
        out.ok = false;
        return out;
      }
      out.state.theta *= 1.0 / std::sqrt(nt);
      return out;
    }
  }
  out.ok = false;
  return out;
}

SpatialStepOutcome step_spatial(const SpatialState& sp,
                                const TemporalState& before,
                                const TemporalState& after, const Fiber& fiber,
                                const StepParams& p, const double* noise) {
  SpatialStepOutcome out;
  if (fiber.kind == FiberKind::Hyperbolic) {
    HypPolar hp = hyp_from_ambient(sp, fiber);
    out.status = hyp_step(hp, before, after, fiber, p, noise);
    out.state = (out.status == SpatialStatus::Failure) ? sp
                                                       : hyp_to_ambient(hp, fiber);
    return out;
  }
  double h = after.s - before.s;
  double b = before.b;
  double v = b * std::exp(-before.log_alpha);  // spatial speed a/alpha^2
  int n = fiber.ambient_dim;

  // Exact geodesic transport of the pair (x, theta) over the substep.
  SpatialState mid;
  mid.x = Vec(n);
  mid.theta = Vec(n);
  double phi = v * h;
  switch (fiber.kind) {
    case FiberKind::Euclidean:
      mid.x = sp.x + phi * sp.theta;
      mid.theta = sp.theta;
      break;
    case FiberKind::Spherical: {
      double c = std::cos(phi), s = std::sin(phi);
      mid.x = c * sp.x + s * sp.theta;
      mid.theta = -s * sp.x + c * sp.theta;
      out.rot_cos = c;
      out.rot_sin = s;
      break;
    }
    case FiberKind::Hyperbolic:
      break;  // handled above in polar form
  }

  if (p.sigma > 0) {
    if (b <= 0) {
      // g = sigma^2/(tdot^2-1) is infinite at a = 0: geodesic sub-step only.
      out.status = SpatialStatus::DegenerateVelocity;
    } else {
      double g = p.sigma * p.sigma / (b * b);
      double decay = 1.0 - 0.5 * (fiber.d - 1) * g * h;
      Vec w = projector_noise(mid, fiber, noise);
      double amp = std::sqrt(g * h);
      for (int i = 0; i < n; ++i) {
        mid.theta[i] = decay * mid.theta[i] + amp * w[i];
      }
    }
  }

  ProjectOutcome proj = project_to_manifold(mid.x, mid.theta, fiber);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(proj.state.x[i]) || !std::isfinite(proj.state.theta[i])) {
      proj.ok = false;
    }
  }
  if (!proj.ok) {
    out.status = SpatialStatus::Failure;
    out.state = sp;
    return out;
  }
  out.state = proj.state;
  return out;
}

Trajectory simulate_full(TemporalState init_t, SpatialState init_s,
                         const ExpansionModel& m, const Fiber& fiber,
                         const StepParams& p, double s_max, Rng& rng,
                         int thin) {
  if (thin < 1) thin = 1;
  Trajectory traj;
  traj.fiber = fiber;

  TemporalState st = init_t;
  SpatialState sp = init_s;
  // The hyperboloid state lives in polar form across the whole run; ambient
  // coordinates are reconstructed only for recording (round-tripping through
  // ambient every step would reintroduce the e^{2 chi} cancellation).
  const bool hyp = fiber.kind == FiberKind::Hyperbolic;
  HypPolar hp;
  if (hyp) hp = hyp_from_ambient(init_s, fiber);
  double clock = 0, conformal = 0, log_ia = -kInf;
  double cosA = 1, sinA = 0;

  auto integrand_clock = [&](const TemporalState& x) {
    double bb = x.b;
    return p.sigma * p.sigma / std::fmax(bb * bb, 1e-14);
  };
  auto integrand_conf = [&](const TemporalState& x) {
    return x.b * std::exp(-x.log_alpha);
  };
  auto integrand_lia = [&](const TemporalState& x) {
    return m.log_alpha(x.t) + std::log(x.tdot);
  };
  double f_clock = integrand_clock(st);
  double f_conf = integrand_conf(st);
  double f_lia = integrand_lia(st);

  auto record = [&]() {
    if (hyp) sp = hyp_to_ambient(hp, fiber);
    traj.temporal.samples.push_back({st.s, st.t, st.tdot, st.a, clock,
                                     conformal, log_ia,
                                     st.log_alpha + std::log(st.b)});
    SpatialSample ss;
    ss.s = st.s;
    ss.x = sp.x;
    ss.theta = sp.theta;
    if (fiber.kind == FiberKind::Spherical) {
      ss.cosA = cosA;
      ss.sinA = sinA;
    } else {
      ss.cosA = std::cos(conformal);
      ss.sinA = std::sin(conformal);
    }
    traj.spatial.push_back(ss);
  };
  record();

  std::uint64_t steps = 0;
  Termination why = Termination::ProperTimeBudget;
  const double s_end = s_max - 1e-12 * std::fmax(1.0, s_max);
  double noise[Vec::kCap];

  while (st.s < s_end) {
    if (m.T < kInf && st.t >= m.T - p.eps_horizon) {
      why = Termination::HorizonReached;
      break;
    }
    double dW = rng.normal();
    for (int i = 0; i < fiber.ambient_dim; ++i) noise[i] = rng.normal();

    StepOutcome ot = step_temporal(st, m, p, dW);
    if (ot.status == Termination::NumericalFailure) {
      why = Termination::NumericalFailure;
      break;
    }
    SpatialStepOutcome os;
    if (hyp) {
      os.status = hyp_step(hp, st, ot.state, fiber, p, noise);
    } else {
      os = step_spatial(sp, st, ot.state, fiber, p, noise);
    }
    if (os.status == SpatialStatus::Failure) {
      why = Termination::NumericalFailure;
      break;
    }

    double g0 = f_clock, g1 = integrand_clock(ot.state);
    double c0 = f_conf, c1 = integrand_conf(ot.state);
    double l0 = f_lia, l1 = integrand_lia(ot.state);
    clock += 0.5 * (g0 + g1) * ot.h;
    conformal += 0.5 * (c0 + c1) * ot.h;
    log_ia = logaddexp(log_ia, std::log(0.5 * ot.h) + logaddexp(l0, l1));
    f_clock = g1;
    f_conf = c1;
    f_lia = l1;

    // Compose the exact per-step rotation into the tracked phase so that
    // (cosA, sinA) stays bit-consistent with the rotations applied to (x,
    // theta) even when A is astronomically large.
    if (fiber.kind == FiberKind::Spherical) {
      double nc = cosA * os.rot_cos - sinA * os.rot_sin;
      double ns = sinA * os.rot_cos + cosA * os.rot_sin;
      cosA = nc;
      sinA = ns;
      if ((steps & 4095) == 4095) {
        double r = std::hypot(cosA, sinA);
        cosA /= r;
        sinA /= r;
      }
    }

    st = ot.state;
    if (!hyp) sp = os.state;
    ++steps;
    bool done = (ot.status == Termination::HorizonReached) || st.s >= s_end;
    if (steps % static_cast<std::uint64_t>(thin) == 0 || done) record();
    if (ot.status == Termination::HorizonReached) {
      why = Termination::HorizonReached;
      break;
    }
  }
  if (traj.temporal.samples.back().s < st.s) record();
  traj.temporal.terminated = why;
  traj.temporal.steps = steps;
  return traj;
}

PolarDiagnostics polar_diagnostics(const SpatialState& sp,
                                   const TemporalState& ts,
                                   const ExpansionModel& m) {
  (void)ts;
  (void)m;
  int n = sp.x.size();
  PolarDiagnostics out;
  double r2 = 0;
  for (int i = 1; i < n; ++i) r2 += sp.x[i] * sp.x[i];
  out.r = std::sqrt(r2);
  if (out.r < 1e-8) {
    throw std::invalid_argument("polar_diagnostics: r too small for the radial split");
  }
  out.theta_unit = Vec(n - 1);
  for (int i = 1; i < n; ++i) out.theta_unit[i - 1] = sp.x[i] / out.r;
  // c/a = Theta^0 / r and rho/r = |angular part of Theta|; these follow from
  // c = alpha^2 rdot / sqrt(1+r^2), b = alpha^2 r^2 |thetadot| and the
  // tangency relations on the hyperboloid.
  // |c/a| <= 1 identically on the constraint set; the reconstruction of
  // Theta^0 and r from the same state can disagree by a couple of ulps.
  out.c_over_a = std::clamp(sp.theta[0] / out.r, -1.0, 1.0);
  double dot_rad = 0;
  for (int i = 1; i < n; ++i) dot_rad += sp.theta[i] * out.theta_unit[i - 1];
  if (std::fabs(dot_rad) < 1e6) {
    double ang2 = 0;
    for (int i = 1; i < n; ++i) {
      double c = sp.theta[i] - dot_rad * out.theta_unit[i - 1];
      ang2 += c * c;
    }
    out.rho_over_r = std::sqrt(ang2);
  } else {
    // At large radius the O(1) angular part is a catastrophic cancellation
    // between O(cosh chi) terms; fall back to the constraint identity
    // (c/a)^2 + (rho/r)^2 = 1, which the direct subtraction reproduces only
    // up to eps * dot_rad.
    out.rho_over_r =
        std::sqrt(std::fmax(0.0, 1.0 - out.c_over_a * out.c_over_a));
  }
  return out;
}

const char* to_string(BoundaryPoint::Kind k) {
  switch (k) {
    case BoundaryPoint::Kind::FiberPoint: return "FiberPoint";
    case BoundaryPoint::Kind::NullDirection: return "NullDirection";
    case BoundaryPoint::Kind::GreatCircle: return "GreatCircle";
    case BoundaryPoint::Kind::TimelikeApex: return "TimelikeApex";
    default: return "Unconverged";
  }
}

BoundaryPoint boundary_limit(const Trajectory& traj, const ExpansionModel& m,
                             const Fiber& fiber, double tol_tail) {
  BoundaryPoint out;
  size_t n = traj.spatial.size();
  if (n < 10 || traj.temporal.samples.size() != n) {
    out.diagnostics = "too few aligned samples";
    return out;
  }
  size_t tail = std::max<size_t>(2, n / 5);
  size_t lo = n - tail;
  const auto& ts = traj.temporal.samples;
  const auto& xs = traj.spatial;
  double t_ref = ts.front().t;
  double t_end = ts.back().t;

  HorizonIntegrals hz = horizon_integrals(m);
  if (hz.i_plus < kInf) {
    // Remaining-variation certificate: dist(x_s, x_inf) <= int_{t_end}^T du/alpha.
    ImproperResult rem = improper_integral(
        [&](double u) { return 1.0 / m.alpha(u); }, t_end, m.T, 1e-10);
    out.x_inf = xs.back().x;
    out.certificate = rem.value;
    if (rem.verdict == ImproperVerdict::Finite && rem.value < tol_tail) {
      out.kind = BoundaryPoint::Kind::FiberPoint;
    } else {
      out.diagnostics = "remaining variation above tolerance";
    }
    return out;
  }

  switch (fiber.kind) {
    case FiberKind::Euclidean: {
      // theta_inf first (tail average), then a second pass for delta.
      Vec th(fiber.ambient_dim);
      for (size_t i = lo; i < n; ++i) th += xs[i].theta;
      double nt = norm(th);
      if (!(nt > 0)) {
        out.diagnostics = "degenerate direction average";
        return out;
      }
      th *= 1.0 / nt;
      double d_last = 0, dev = 0;
      for (size_t i = lo; i < n; ++i) {
        double delta = conformal_time(m, t_ref, ts[i].t) - dot(xs[i].x, th);
        if (i > lo) dev = std::fmax(dev, std::fabs(delta - d_last));
        d_last = delta;
      }
      out.theta_inf = th;
      out.delta_inf = d_last;
      out.certificate = dev;
      out.kind = (dev < tol_tail) ? BoundaryPoint::Kind::NullDirection
                                  : BoundaryPoint::Kind::Unconverged;
      if (out.kind == BoundaryPoint::Kind::Unconverged) {
        out.diagnostics = "delta tail not Cauchy";
      }
      return out;
    }
    case FiberKind::Hyperbolic: {
      Vec th(fiber.ambient_dim - 1);
      double d_last = 0, dev = 0;
      for (size_t i = lo; i < n; ++i) {
        double r2 = 0;
        for (int j = 1; j < fiber.ambient_dim; ++j) r2 += xs[i].x[j] * xs[i].x[j];
        double r = std::sqrt(r2);
        for (int j = 1; j < fiber.ambient_dim; ++j) th[j - 1] += xs[i].x[j] / r;
        double delta = conformal_time(m, t_ref, ts[i].t) - std::asinh(r);
        if (i > lo) dev = std::fmax(dev, std::fabs(delta - d_last));
        d_last = delta;
      }
      double nt = norm(th);
      if (!(nt > 0)) {
        out.diagnostics = "degenerate direction average";
        return out;
      }
      th *= 1.0 / nt;
      out.theta_inf = th;
      out.delta_inf = d_last;
      out.certificate = dev;
      out.kind = (dev < tol_tail) ? BoundaryPoint::Kind::NullDirection
                                  : BoundaryPoint::Kind::Unconverged;
      if (out.kind == BoundaryPoint::Kind::Unconverged) {
        out.diagnostics = "delta tail not Cauchy";
      }
      return out;
    }
    case FiberKind::Spherical: {
      int na = fiber.ambient_dim;
      Vec U(na), V(na);
      for (size_t i = lo; i < n; ++i) {
        for (int j = 0; j < na; ++j) {
          U[j] += xs[i].cosA * xs[i].x[j] - xs[i].sinA * xs[i].theta[j];
          V[j] += xs[i].sinA * xs[i].x[j] + xs[i].cosA * xs[i].theta[j];
        }
      }
      U *= 1.0 / static_cast<double>(tail);
      V *= 1.0 / static_cast<double>(tail);
      double resid = 0;
      for (size_t i = lo; i < n; ++i) {
        double r2 = 0;
        for (int j = 0; j < na; ++j) {
          double e = xs[i].x[j] - xs[i].cosA * U[j] - xs[i].sinA * V[j];
          r2 += e * e;
        }
        resid = std::fmax(resid, std::sqrt(r2));
      }
      out.U = U;
      out.V = V;
      out.certificate = resid;
      out.kind = (resid < 5.0 * tol_tail) ? BoundaryPoint::Kind::GreatCircle
                                          : BoundaryPoint::Kind::Unconverged;
      if (out.kind == BoundaryPoint::Kind::Unconverged) {
        out.diagnostics = "great-circle residual above tolerance";
      }
      return out;
    }
  }
  return out;
}

}  // namespace rwdiff
