#include "rwdiff/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rwdiff/rng.hpp"

namespace rwdiff {
namespace {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RWDIFF_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

double pseudo_norm_residual(const TemporalSample& smp, const ExpansionModel& m) {
  // Reconstruction of tdot^2 - 1 from (log a, log alpha), in log space so
  // that astronomically large tdot does not overflow; the residual is
  // relative once tdot^2 - 1 exceeds 1.
  double u = smp.tdot * smp.tdot - 1.0;
  bool a_zero = smp.log_a == -kInf;
  if (a_zero && u <= 0) return 0;
  if (a_zero || u <= 0) return std::fmax(u, std::exp(smp.log_a));
  double lr = 2.0 * (smp.log_a - m.log_alpha(smp.t));
  if (u >= 1.0) return std::fabs(std::expm1(lr - std::log(u)));
  return std::fabs(std::exp(lr) - u);
}

double tail_start_s(const TemporalPath& path, double fraction) {
  double s0 = path.samples.front().s, s1 = path.samples.back().s;
  return s1 - fraction * (s1 - s0);
}

TrajectorySummary summarize(const ExpansionModel& m, const Fiber& fiber,
                            const EnsembleConfig& cfg, const Trajectory* traj,
                            const TemporalPath& path, double burn,
                            const std::vector<double>& edges) {
  TrajectorySummary out;
  out.terminated = path.terminated;
  const auto& smp = path.samples;
  const auto& last = smp.back();
  // Early horizon termination can end the path before the nominal burn-in.
  if (last.s <= burn) burn = 0.5 * last.s;
  out.final_s = last.s;
  out.final_t = last.t;
  out.final_tdot = last.tdot;
  out.final_a = last.a;
  out.final_clock = last.clock;

  for (const auto& x : smp) {
    out.max_pseudo_residual =
        std::fmax(out.max_pseudo_residual, pseudo_norm_residual(x, m));
  }

  try {
    Rates r = rate_estimate(path, m);
    out.rate_tdot = r.rate_tdot;
    out.rate_alpha = r.rate_alpha;
    out.rate_int_alpha = r.rate_int_alpha;
    out.rates_valid = true;
  } catch (const std::exception&) {
    out.rates_valid = false;
  }

  out.return_count = return_count(path, cfg.return_level, burn);
  int window = std::max<int>(2, static_cast<int>(smp.size()) / 10);
  try {
    ClockVerdict cv = clock_diagnostic(path, window);
    out.clock_converging = cv.converging;
    out.clock_value = cv.value;
  } catch (const std::exception&) {
    // Too few retained samples for a tail window (aggressive thinning near a
    // finite horizon): fall back to the termination-based verdict.
    out.clock_converging = path.terminated == Termination::HorizonReached;
    out.clock_value = last.clock;
  }

  // Time average of 1/tdot^2 and the occupation histogram over [burn, end].
  double mass = 0, integral = 0;
  for (size_t i = 1; i < smp.size(); ++i) {
    if (smp[i].s < burn) continue;
    double h = smp[i].s - smp[i - 1].s;
    mass += h;
    double f0 = 1.0 / (smp[i - 1].tdot * smp[i - 1].tdot);
    double f1 = 1.0 / (smp[i].tdot * smp[i].tdot);
    integral += 0.5 * (f0 + f1) * h;
  }
  out.time_avg_inv_sq = mass > 0 ? integral / mass : 0;
  out.occ_weights = occupation_measure(path, burn, edges);

  double tail_s = tail_start_s(path, 0.2);
  // Trailing 20% of retained samples by count, matching boundary_limit: near
  // a finite horizon the adaptive step shrinks geometrically, so a proper-time
  // window would reach far back into the pre-settling part of the path.
  for (size_t i = smp.size() - std::max<size_t>(2, smp.size() / 5);
       i < smp.size(); ++i) {
    out.a_tail_dev = std::fmax(out.a_tail_dev, std::fabs(smp[i].a - last.a));
  }

  if (traj != nullptr) {
    for (const auto& sp : traj->spatial) {
      SpatialState ss{sp.x, sp.theta};
      out.max_constraint_residual =
          std::fmax(out.max_constraint_residual, constraint_residual(ss, fiber));
    }
    BoundaryPoint bp = boundary_limit(*traj, m, fiber, cfg.tol_tail);
    out.boundary_kind = to_string(bp.kind);
    out.boundary_certificate = bp.certificate;
    out.delta_inf = bp.delta_inf;

    if (fiber.kind == FiberKind::Hyperbolic) {
      out.tail_ca_min = kInf;
      out.tail_ca_max = -kInf;
      for (size_t i = 0; i < traj->spatial.size(); ++i) {
        if (smp[i].s < tail_s) continue;
        SpatialState ss{traj->spatial[i].x, traj->spatial[i].theta};
        try {
          PolarDiagnostics pd = polar_diagnostics(ss, {}, m);
          out.tail_ca_min = std::fmin(out.tail_ca_min, pd.c_over_a);
          out.tail_ca_max = std::fmax(out.tail_ca_max, pd.c_over_a);
        } catch (const std::exception&) {
        }
      }
      out.tail_delta_dev = bp.certificate;
    }
    if (fiber.kind == FiberKind::Spherical &&
        bp.kind != BoundaryPoint::Kind::FiberPoint) {
      out.gc_unorm = norm(bp.U);
      out.gc_vnorm = norm(bp.V);
      out.gc_uv = dot(bp.U, bp.V);
      out.gc_residual = bp.certificate;
    }
  }
  return out;
}

StatSummary collect(const std::vector<TrajectorySummary>& per,
                    const std::function<bool(const TrajectorySummary&)>& ok,
                    const std::function<double(const TrajectorySummary&)>& get) {
  StatSummary s;
  for (const auto& t : per) {
    if (ok(t)) s.values.push_back(get(t));
  }
  size_t n = s.values.size();
  if (n == 0) return s;
  double sum = 0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double var = 0;
    for (double v : s.values) var += (v - s.mean) * (v - s.mean);
    var /= static_cast<double>(n - 1);
    s.se = std::sqrt(var / static_cast<double>(n));
  }
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<double> occupation_edges() {
  // Geometric bins in tdot - 1 spanning twelve decades; fine enough that
  // binning error is negligible against the KS thresholds in use.
  const int nbins = 4096;
  const double lo = std::log(1e-6), hi = std::log(1e6);
  std::vector<double> edges(nbins + 1);
  for (int i = 0; i <= nbins; ++i) {
    edges[i] = 1.0 + std::exp(lo + (hi - lo) * i / nbins);
  }
  return edges;
}

std::vector<double> occupation_measure(const TemporalPath& path,
                                       double burn_in,
                                       const std::vector<double>& edges) {
  std::vector<double> w(edges.size() - 1, 0.0);
  const auto& smp = path.samples;
  bool any = false;
  for (size_t i = 1; i < smp.size(); ++i) {
    if (smp[i].s < burn_in) continue;
    any = true;
    double h = smp[i].s - smp[i - 1].s;
    double v = 0.5 * (smp[i - 1].tdot + smp[i].tdot);
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    size_t bin = it == edges.begin()
                     ? 0
                     : std::min(w.size() - 1,
                                static_cast<size_t>(it - edges.begin()) - 1);
    w[bin] += h;
  }
  if (!any) throw std::invalid_argument("occupation_measure: empty window");
  return w;
}

double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::fmax(d, std::fabs((i + 1) / n - f));
    d = std::fmax(d, std::fabs(i / n - f));
  }
  return d;
}

double ks_distance(const std::vector<double>& edges,
                   const std::vector<double>& weights,
                   const std::function<double(double)>& cdf) {
  if (weights.empty() || edges.size() != weights.size() + 1) {
    throw std::invalid_argument("ks_distance: bad histogram");
  }
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0)) throw std::invalid_argument("ks_distance: empty histogram");
  double cum = 0, d = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    d = std::fmax(d, std::fabs(cum - cdf(edges[i])));
    cum += weights[i] / total;
    d = std::fmax(d, std::fabs(cum - cdf(edges[i + 1])));
  }
  return d;
}

int return_count(const TemporalPath& path, double level, double burn_in) {
  if (!(level > 1)) throw std::invalid_argument("return_count: level must be > 1");
  int count = 0;
  const auto& smp = path.samples;
  for (size_t i = 1; i < smp.size(); ++i) {
    if (smp[i].s < burn_in) continue;
    if (smp[i - 1].tdot >= level && smp[i].tdot < level) ++count;
  }
  return count;
}

EnsembleStats run_ensemble(const EnsembleConfig& cfg) {
  if (cfg.n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj >= 1");
  ExpansionModel m = catalog(cfg.model_name, cfg.model_params);
  Fiber fiber = make_fiber(cfg.fiber_kind, cfg.d);
  StepParams p;
  p.sigma = cfg.sigma;
  p.d = cfg.d;
  p.ds = cfg.ds;
  double burn = cfg.burn_in < 0 ? cfg.s_max / 4 : cfg.burn_in;
  std::vector<double> edges = occupation_edges();

  EnsembleStats out;
  out.config = cfg;
  out.n_traj = cfg.n_traj;
  out.prediction = predict_regimes(m, fiber.kappa, cfg.d, cfg.sigma);
  out.hist_edges = edges;
  out.per_traj.resize(cfg.n_traj);

  auto run_one = [&](int i) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
    TemporalState init = cfg.entrance
                             ? entrance_start(m, cfg.a0, p)
                             : make_temporal_state(0, cfg.t0, cfg.a0, m);
    if (cfg.temporal_only) {
      TemporalPath path =
          simulate_temporal(init, m, p, cfg.s_max, rng, cfg.thin);
      out.per_traj[i] = summarize(m, fiber, cfg, nullptr, path, burn, edges);
    } else {
      Trajectory traj = simulate_full(init, default_spatial_init(fiber), m,
                                      fiber, p, cfg.s_max, rng, cfg.thin);
      out.per_traj[i] =
          summarize(m, fiber, cfg, &traj, traj.temporal, burn, edges);
    }
  };

  int workers = std::min(resolve_workers(cfg.workers), cfg.n_traj);
  if (workers <= 1) {
    for (int i = 0; i < cfg.n_traj; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < cfg.n_traj; i = next.fetch_add(1)) {
          try {
            run_one(i);
          } catch (const std::exception&) {
            out.per_traj[i].terminated = Termination::NumericalFailure;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Deterministic fold in trajectory-index order.
  out.hist_weights.assign(edges.size() - 1, 0.0);
  for (const auto& t : out.per_traj) {
    if (t.terminated == Termination::NumericalFailure) {
      ++out.failures;
      continue;
    }
    for (size_t b = 0; b < t.occ_weights.size(); ++b) {
      out.hist_weights[b] += t.occ_weights[b];
    }
  }
  out.run_failed = out.failures * 20 > cfg.n_traj;  // > 5%

  auto not_failed = [](const TrajectorySummary& t) {
    return t.terminated != Termination::NumericalFailure;
  };
  auto rates_ok = [](const TrajectorySummary& t) {
    return t.terminated != Termination::NumericalFailure && t.rates_valid;
  };
  out.stats["rate_tdot"] =
      collect(out.per_traj, rates_ok,
              [](const TrajectorySummary& t) { return t.rate_tdot; });
  out.stats["rate_alpha"] =
      collect(out.per_traj, rates_ok,
              [](const TrajectorySummary& t) { return t.rate_alpha; });
  out.stats["rate_int_alpha"] =
      collect(out.per_traj, rates_ok,
              [](const TrajectorySummary& t) { return t.rate_int_alpha; });
  out.stats["return_count"] = collect(
      out.per_traj, not_failed,
      [](const TrajectorySummary& t) { return double(t.return_count); });
  out.stats["clock_converging"] = collect(
      out.per_traj, not_failed,
      [](const TrajectorySummary& t) { return t.clock_converging ? 1.0 : 0.0; });
  out.stats["time_avg_inv_sq"] =
      collect(out.per_traj, not_failed,
              [](const TrajectorySummary& t) { return t.time_avg_inv_sq; });
  out.stats["final_tdot"] =
      collect(out.per_traj, not_failed,
              [](const TrajectorySummary& t) { return t.final_tdot; });
  out.stats["max_pseudo_residual"] = collect(
      out.per_traj, not_failed,
      [](const TrajectorySummary& t) { return t.max_pseudo_residual; });

  if (out.prediction.tdot_behavior == RegimePrediction::Tdot::HarrisRecurrent &&
      out.prediction.invariant_H > 0 && !out.run_failed) {
    InvariantMeasure nu(out.prediction.invariant_H, cfg.sigma, cfg.d);
    out.ks = ks_distance(out.hist_edges, out.hist_weights,
                         [&](double x) { return nu.cdf(x); });
  }
  return out;
}

VerdictReport verify_regime(const EnsembleStats& stats,
                            const RegimePrediction& prediction,
                            const Tolerances& tol) {
  VerdictReport rep;
  const int n = stats.n_traj - stats.failures;
  if (n <= 0) throw std::invalid_argument("verify_regime: no usable trajectories");
  auto frac = [&](const std::function<bool(const TrajectorySummary&)>& pred) {
    int k = 0;
    for (const auto& t : stats.per_traj) {
      if (t.terminated != Termination::NumericalFailure && pred(t)) ++k;
    }
    return static_cast<double>(k) / n;
  };

  using Tdot = RegimePrediction::Tdot;
  {
    Verdict v;
    v.claim = "tdot_behavior";
    v.theory = to_string(prediction.tdot_behavior);
    switch (prediction.tdot_behavior) {
      case Tdot::Transient: {
        const StatSummary& r = stats.stats.at("rate_tdot");
        v.tolerance = tol.transient_margin;
        v.empirical = "mean rate_tdot = " + fmt(r.mean) + " (se " + fmt(r.se) + ")";
        v.outcome = (!r.values.empty() &&
                     r.mean - tol.transient_margin * r.se > 0)
                        ? "pass"
                        : "fail";
        break;
      }
      case Tdot::HarrisRecurrent: {
        double ks = stats.ks;
        if (ks < 0 && prediction.invariant_H > 0 && !stats.hist_weights.empty()) {
          InvariantMeasure nu(prediction.invariant_H, stats.config.sigma,
                              stats.config.d);
          ks = ks_distance(stats.hist_edges, stats.hist_weights,
                           [&](double x) { return nu.cdf(x); });
        }
        double returning = frac(
            [](const TrajectorySummary& t) { return t.return_count >= 1; });
        v.tolerance = tol.ks;
        v.empirical = "ks = " + fmt(ks) + ", returning fraction = " + fmt(returning);
        v.outcome = (ks >= 0 && ks < tol.ks && returning >= tol.majority)
                        ? "pass"
                        : "fail";
        break;
      }
      case Tdot::FiniteLifetimeDivergent: {
        double horizon = frac([](const TrajectorySummary& t) {
          return t.terminated == Termination::HorizonReached;
        });
        v.tolerance = tol.majority;
        v.empirical = "horizon-reached fraction = " + fmt(horizon);
        v.outcome = horizon >= tol.majority ? "pass" : "fail";
        break;
      }
      case Tdot::TransientInProbability: {
        // No rate is available in this regime; report the observed level
        // without asserting one.
        double high = frac([&](const TrajectorySummary& t) {
          return t.final_tdot > stats.config.return_level;
        });
        v.empirical = "fraction with final tdot above level = " + fmt(high);
        v.outcome = "unconverged";
        break;
      }
      default:
        v.empirical = "no prediction";
        v.outcome = "unconverged";
    }
    rep.claims.push_back(v);
  }

  {
    Verdict v;
    v.claim = "clock";
    v.theory = prediction.clock_convergent ? "Converging" : "Diverging";
    double agree = frac([&](const TrajectorySummary& t) {
      return t.clock_converging == prediction.clock_convergent;
    });
    v.tolerance = tol.majority;
    v.empirical = "agreeing fraction = " + fmt(agree);
    v.outcome = agree >= tol.majority ? "pass" : "fail";
    rep.claims.push_back(v);
  }

  {
    Verdict v;
    v.claim = "direction";
    v.theory = to_string(prediction.direction_behavior);
    // Direction convergence is equivalent to clock convergence; reuse the
    // per-trajectory clock verdicts.
    bool expect_converge =
        prediction.direction_behavior == RegimePrediction::Direction::Converges;
    double agree = frac([&](const TrajectorySummary& t) {
      return t.clock_converging == expect_converge;
    });
    v.tolerance = tol.majority;
    v.empirical = "agreeing fraction = " + fmt(agree);
    if (prediction.direction_behavior == RegimePrediction::Direction::Indeterminate) {
      v.outcome = "unconverged";
    } else {
      v.outcome = agree >= tol.majority ? "pass" : "fail";
    }
    rep.claims.push_back(v);
  }

  if (!stats.config.temporal_only) {
    Verdict v;
    v.claim = "position";
    v.theory = to_string(prediction.position_behavior);
    const char* expect = nullptr;
    switch (prediction.position_behavior) {
      case RegimePrediction::Position::ConvergesInFiber: expect = "FiberPoint"; break;
      case RegimePrediction::Position::EscapesAlongHypersurface: expect = "NullDirection"; break;
      case RegimePrediction::Position::GreatCircle: expect = "GreatCircle"; break;
      default: break;
    }
    if (expect == nullptr) {
      v.empirical = "no prediction";
      v.outcome = "unconverged";
    } else {
      double match = frac([&](const TrajectorySummary& t) {
        return t.boundary_kind == expect;
      });
      double open = frac([&](const TrajectorySummary& t) {
        return t.boundary_kind == expect || t.boundary_kind == "Unconverged";
      });
      v.tolerance = tol.majority;
      v.empirical = "matching fraction = " + fmt(match);
      if (match >= tol.majority) {
        v.outcome = "pass";
      } else if (open >= tol.majority) {
        v.outcome = "unconverged";
      } else {
        v.outcome = "fail";
      }
    }
    rep.claims.push_back(v);
  }

  {
    Verdict v;
    v.claim = "lifetime";
    v.theory = prediction.lifetime_finite ? "finite" : "infinite";
    double horizon = frac([](const TrajectorySummary& t) {
      return t.terminated == Termination::HorizonReached;
    });
    v.tolerance = tol.majority;
    v.empirical = "horizon-reached fraction = " + fmt(horizon);
    double agree = prediction.lifetime_finite ? horizon : 1.0 - horizon;
    v.outcome = agree >= tol.majority ? "pass" : "fail";
    rep.claims.push_back(v);
  }
  return rep;
}

OracleReport oracle_compare(const ExpansionModel& m, const StepParams& base,
                            double t0, double a0, double s_max,
                            std::uint64_t seed, std::vector<double> h_list,
                            int n_seeds) {
  if (h_list.size() < 3) {
    throw std::invalid_argument("oracle_compare: need >= 3 step sizes");
  }
  std::sort(h_list.begin(), h_list.end(), std::greater<double>());
  double h_fine = h_list.back();
  for (double h : h_list) {
    double ratio = h / h_fine;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9) {
      throw std::invalid_argument("oracle_compare: steps must be multiples of the finest");
    }
  }
  size_t n_fine = static_cast<size_t>(std::llround(s_max / h_fine));

  OracleReport rep;
  rep.h = h_list;
  rep.deviation.assign(h_list.size(), 0.0);

  for (int sidx = 0; sidx < n_seeds; ++sidx) {
    Rng rng(seed, static_cast<std::uint64_t>(sidx));
    std::vector<double> xi(n_fine);
    for (auto& x : xi) x = rng.normal();

    for (size_t k = 0; k < h_list.size(); ++k) {
      double h = h_list[k];
      size_t block = static_cast<size_t>(std::llround(h / h_fine));
      size_t n = n_fine / block;
      StepParams p = base;
      p.ds = h;
      p.adaptive = false;

      TemporalState sa = make_temporal_state(0, t0, a0, m);
      double t = t0, y = sa.tdot;
      double dev = 0;
      for (size_t i = 0; i < n; ++i) {
        double z = 0;
        for (size_t j = 0; j < block; ++j) z += xi[i * block + j];
        z /= std::sqrt(static_cast<double>(block));

        StepOutcome o = step_temporal(sa, m, p, z);
        if (o.status == Termination::NumericalFailure) break;
        sa = o.state;

        // Independent tamed Euler scheme in (t, tdot):
        //   dy = [ (d/2) sigma^2 y - H(t)(y^2 - 1) ] ds + sigma sqrt(y^2-1) dW
        double mu = 0.5 * p.d * p.sigma * p.sigma * y -
                    m.H(t) * (y * y - 1.0);
        double diff = p.sigma * std::sqrt(std::fmax(y * y - 1.0, 0.0));
        double t_new = t + y * h;
        y += mu * h / (1.0 + h * std::fabs(mu)) + diff * std::sqrt(h) * z;
        if (y < 1.0) y = 1.0;
        t = t_new;

        dev = std::fmax(dev, std::fabs(sa.tdot - y));
      }
      rep.deviation[k] += dev / n_seeds;
    }
  }

  // Least-squares slope of log(deviation) against log(h).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t k = 0; k < h_list.size(); ++k) {
    if (!(rep.deviation[k] > 0)) continue;
    double lx = std::log(h_list[k]), ly = std::log(rep.deviation[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  rep.fitted_order =
      cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0;
  return rep;
}

}  // namespace rwdiff
