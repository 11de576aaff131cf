#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rwdiff/expansion.hpp"
#include "rwdiff/spatial.hpp"
#include "rwdiff/temporal.hpp"

namespace rwdiff {

struct EnsembleConfig {
  std::string model_name = "constant";      // catalog family, echoed in output
  std::vector<double> model_params;
  FiberKind fiber_kind = FiberKind::Euclidean;
  int d = 3;
  double sigma = 1;
  double ds = 1e-3;
  double s_max = 200;
  int n_traj = 64;
  int thin = 100;
  std::uint64_t seed = 0;
  bool temporal_only = false;
  // Initial condition: either an explicit (t0, a0) or the entrance law start
  // near the initial singularity.
  bool entrance = false;
  double t0 = 1, a0 = 1;
  double burn_in = -1;       // < 0: s_max / 4
  double return_level = 2;   // level for the down-crossing count
  double tol_tail = 1e-2;    // boundary-limit tail tolerance
  int workers = 0;           // 0: RWDIFF_WORKERS env, else hardware
};

// Per-trajectory reductions computed inside the worker, so the fold over
// trajectories only ever combines plain numbers in index order.
struct TrajectorySummary {
  Termination terminated = Termination::ProperTimeBudget;
  double rate_tdot = 0, rate_alpha = 0, rate_int_alpha = 0;
  bool rates_valid = false;
  int return_count = 0;
  bool clock_converging = false;
  double clock_value = 0;
  double final_s = 0, final_t = 0, final_tdot = 1, final_a = 0, final_clock = 0;
  double time_avg_inv_sq = 0;          // time average of 1/tdot^2 after burn-in
  double max_pseudo_residual = 0;      // relative pseudo-norm reconstruction
  double max_constraint_residual = 0;  // manifold constraints (spatial runs)
  double a_tail_dev = 0;               // max |a_i - a_end| over the tail
  std::string boundary_kind;           // spatial runs only
  double boundary_certificate = 0;
  double delta_inf = 0;
  // Hyperbolic-fiber escape diagnostics over the tail window.
  double tail_ca_min = 0, tail_ca_max = 0, tail_delta_dev = 0;
  // Spherical-fiber great-circle diagnostics.
  double gc_unorm = 0, gc_vnorm = 0, gc_uv = 0, gc_residual = 0;
  std::vector<double> occ_weights;  // time-weighted occupation per bin
};

struct StatSummary {
  double mean = 0;
  double se = 0;  // standard error across trajectories
  std::vector<double> values;
};

struct Tolerances {
  double rate_rel = 0.10;
  double ks = 0.07;
  double majority = 0.90;     // fraction of seeds that must agree
  double transient_margin = 2.0;  // rate must exceed this many SEs of zero
};

struct Verdict {
  std::string claim;
  std::string theory;
  std::string empirical;
  double tolerance = 0;
  // "pass", "fail" or "unconverged".
  std::string outcome;
};

struct VerdictReport {
  std::vector<Verdict> claims;
  bool any_fail() const {
    for (const auto& v : claims)
      if (v.outcome == "fail") return true;
    return false;
  }
};

struct EnsembleStats {
  EnsembleConfig config;
  int n_traj = 0;
  int failures = 0;
  bool run_failed = false;  // > 5% NumericalFailure
  std::vector<TrajectorySummary> per_traj;
  std::map<std::string, StatSummary> stats;
  // Pooled time-weighted occupation histogram of tdot on shared bin edges.
  std::vector<double> hist_edges;
  std::vector<double> hist_weights;
  double ks = -1;  // vs nu_{H,sigma} when the regime admits one, else -1
  RegimePrediction prediction;
};

EnsembleStats run_ensemble(const EnsembleConfig& config);

// Shared occupation bin edges: geometric in tdot - 1.
std::vector<double> occupation_edges();

// Time-weighted histogram of tdot over [burn_in, end] on the given edges.
std::vector<double> occupation_measure(const TemporalPath& path,
                                       double burn_in,
                                       const std::vector<double>& edges);

// Sup distance between the empirical CDF and a reference CDF.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);
double ks_distance(const std::vector<double>& edges,
                   const std::vector<double>& weights,
                   const std::function<double(double)>& cdf);

// Down-crossings of tdot through `level` after burn_in.
int return_count(const TemporalPath& path, double level, double burn_in);

VerdictReport verify_regime(const EnsembleStats& stats,
                            const RegimePrediction& prediction,
                            const Tolerances& tol = {});

struct OracleReport {
  std::vector<double> h;
  std::vector<double> deviation;  // mean over seeds of max path deviation
  double fitted_order = 0;        // log-log slope of deviation vs h
};

// Strong-order cross-check: the production (t, a^2) scheme against an
// independently written tamed Euler scheme for (t, tdot), both consuming the
// same Brownian increments (coarse steps aggregate the finest increments).
OracleReport oracle_compare(const ExpansionModel& m, const StepParams& base,
                            double t0, double a0, double s_max,
                            std::uint64_t seed, std::vector<double> h_list,
                            int n_seeds = 8);

}  // namespace rwdiff
