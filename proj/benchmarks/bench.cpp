#include <benchmark/benchmark.h>

#include "rwdiff/harness.hpp"
#include "rwdiff/io.hpp"

using namespace rwdiff;

namespace {

void BM_StepTemporal(benchmark::State& state) {
  ExpansionModel m = catalog("sinh");
  StepParams p;
  TemporalState st = make_temporal_state(0, 1, 1, m);
  Rng rng(0, 0);
  for (auto _ : state) {
    StepOutcome out = step_temporal(st, m, p, rng.normal());
    benchmark::DoNotOptimize(out.state.b);
    if (out.status == Termination::None) st = out.state;
  }
}
BENCHMARK(BM_StepTemporal);

void BM_StepSpatial(benchmark::State& state) {
  FiberKind kinds[] = {FiberKind::Euclidean, FiberKind::Spherical,
                       FiberKind::Hyperbolic};
  Fiber f = make_fiber(kinds[state.range(0)], 3);
  ExpansionModel m = catalog("power", {1});
  StepParams p;
  TemporalState a = make_temporal_state(0, 1, 1, m);
  TemporalState b = a;
  b.s = p.ds;
  SpatialState sp = default_spatial_init(f);
  Rng rng(0, 0);
  double noise[Vec::kCap];
  for (auto _ : state) {
    for (int i = 0; i < f.ambient_dim; ++i) noise[i] = rng.normal();
    SpatialStepOutcome out = step_spatial(sp, a, b, f, p, noise);
    benchmark::DoNotOptimize(out.state.x[0]);
    if (out.status == SpatialStatus::Ok) sp = out.state;
  }
}
BENCHMARK(BM_StepSpatial)->Arg(0)->Arg(1)->Arg(2);

void BM_SimulateTemporal(benchmark::State& state) {
  ExpansionModel m = catalog("exp", {1});
  StepParams p;
  for (auto _ : state) {
    Rng rng(0, 0);
    TemporalPath path =
        simulate_temporal(make_temporal_state(0, 1, 1, m), m, p, 10.0, rng, 100);
    benchmark::DoNotOptimize(path.samples.back().tdot);
  }
}
BENCHMARK(BM_SimulateTemporal)->Unit(benchmark::kMillisecond);

void BM_SimulateFull(benchmark::State& state) {
  ExpansionModel m = catalog("power", {1});
  Fiber f = make_fiber(FiberKind::Hyperbolic, 3);
  StepParams p;
  for (auto _ : state) {
    Rng rng(0, 0);
    Trajectory traj =
        simulate_full(make_temporal_state(0, 1, 1, m), default_spatial_init(f),
                      m, f, p, 10.0, rng, 100);
    benchmark::DoNotOptimize(traj.spatial.back().x[0]);
  }
}
BENCHMARK(BM_SimulateFull)->Unit(benchmark::kMillisecond);

void BM_HorizonIntegrals(benchmark::State& state) {
  ExpansionModel m = catalog("sinh");
  for (auto _ : state) {
    HorizonIntegrals hz = horizon_integrals(m);
    benchmark::DoNotOptimize(hz.i_plus);
  }
}
BENCHMARK(BM_HorizonIntegrals);

void BM_InvariantSampler(benchmark::State& state) {
  Rng rng(0, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_invariant(1.0, 1.0, 3, rng));
  }
}
BENCHMARK(BM_InvariantSampler);

void BM_RunEnsemble(benchmark::State& state) {
  EnsembleConfig c;
  c.model_name = "sinh";
  c.temporal_only = true;
  c.s_max = 5;
  c.n_traj = 8;
  c.workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    EnsembleStats st = run_ensemble(c);
    benchmark::DoNotOptimize(st.stats.at("final_tdot").mean);
  }
}
BENCHMARK(BM_RunEnsemble)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
