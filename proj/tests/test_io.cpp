#include <cstdio>

#include "doctest.h"
#include "rwdiff/io.hpp"

using namespace rwdiff;

TEST_CASE("model spec parsing") {
  ModelSpec s = parse_model_spec("power(2)");
  CHECK(s.family == "power");
  REQUIRE(s.params.size() == 1);
  CHECK(s.params[0] == 2.0);
  s = parse_model_spec("power_exp(1,0.5)");
  CHECK(s.family == "power_exp");
  REQUIRE(s.params.size() == 2);
  CHECK(s.params[1] == 0.5);
  s = parse_model_spec("sinh");
  CHECK(s.family == "sinh");
  CHECK(s.params.empty());
  CHECK_THROWS(parse_model_spec("power(2"));
  CHECK_THROWS(parse_model_spec(""));
}

TEST_CASE("key-value parsing with comments") {
  auto kv = parse_key_value(
      "# comment\nmodel.family = sinh\n\nsigma=2.5\n  n_traj = 7 # trailing\n");
  CHECK(kv.at("model.family") == "sinh");
  CHECK(kv.at("sigma") == "2.5");
  CHECK(kv.at("n_traj") == "7");
}

TEST_CASE("ensemble config from key-value map") {
  auto kv = parse_key_value(
      "model.family=power\nmodel.params=1\nfiber=h3\nsigma=0.5\nds=1e-4\n"
      "s_max=12\nn_traj=3\nthin=5\nseed=77\ninit.t0=2\ninit.a0=0.25\n");
  EnsembleConfig c = ensemble_config_from(kv);
  CHECK(c.model_name == "power");
  REQUIRE(c.model_params.size() == 1);
  CHECK(c.model_params[0] == 1.0);
  CHECK(c.fiber_kind == FiberKind::Hyperbolic);
  CHECK(c.d == 3);
  CHECK(c.sigma == 0.5);
  CHECK(c.ds == 1e-4);
  CHECK(c.s_max == 12.0);
  CHECK(c.n_traj == 3);
  CHECK(c.thin == 5);
  CHECK(c.seed == 77);
  CHECK(c.t0 == 2.0);
  CHECK(c.a0 == 0.25);
}

TEST_CASE("fiber flag parsing") {
  FiberKind k;
  int d = 0;
  parse_fiber_flag("s4", &k, &d);
  CHECK(k == FiberKind::Spherical);
  CHECK(d == 4);
  parse_fiber_flag("r3", &k, &d);
  CHECK(k == FiberKind::Euclidean);
  CHECK_THROWS(parse_fiber_flag("z3", &k, &d));
}

TEST_CASE("temporal CSV round-trips exactly") {
  TemporalPath path;
  for (int i = 0; i < 20; ++i) {
    TemporalSample s;
    s.s = 0.1 * i;
    s.t = 1.0 + 0.3 * i;
    s.tdot = 1.0 + 1e-13 * i;
    s.a = 0.123456789012345 * (i + 1);
    s.clock = 1e-9 * i;
    s.conformal = 2.0 * i;
    path.samples.push_back(s);
  }
  std::string csv = temporal_csv(path);
  CHECK(csv.rfind("s,t,tdot,a,clock,conformal", 0) == 0);
  CsvTable tab = parse_csv(csv);
  REQUIRE(tab.rows.size() == 20);
  int col_a = tab.column("a");
  REQUIRE(col_a >= 0);
  for (int i = 0; i < 20; ++i) {
    CHECK(tab.rows[i][col_a] == path.samples[i].a);  // bitwise via %.17g
    CHECK(tab.rows[i][tab.column("tdot")] == path.samples[i].tdot);
  }
  CHECK(tab.column("nope") == -1);
}

TEST_CASE("trajectory CSV carries the spatial columns") {
  ExpansionModel m = catalog("constant");
  Fiber f = make_fiber(FiberKind::Spherical, 3);
  StepParams p;
  p.ds = 1e-2;
  Rng rng(1, 0);
  Trajectory traj = simulate_full(make_temporal_state(0, 1, 1, m),
                                  default_spatial_init(f), m, f, p, 1.0, rng,
                                  10);
  CsvTable tab = parse_csv(trajectory_csv(traj));
  CHECK(tab.column("x0") >= 0);
  CHECK(tab.column("th3") >= 0);
  CHECK(tab.rows.size() == traj.spatial.size());
}

TEST_CASE("model files: family form and tabulated form") {
  write_text_file("model_family.cfg", "family=power\nparams=2\n");
  ExpansionModel m = load_model_file("model_family.cfg");
  CHECK(m.alpha(3.0) == doctest::Approx(9.0).epsilon(1e-12));

  std::string csv = "t,alpha\n";
  for (int i = 0; i <= 30; ++i) {
    double t = 0.5 + 0.25 * i;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, 2.0 * t);
    csv += buf;
  }
  write_text_file("model_tab.csv", csv);
  ExpansionModel tab = load_model_file("model_tab.csv");
  CHECK(tab.alpha(3.0) == doctest::Approx(6.0).epsilon(1e-6));
  std::remove("model_family.cfg");
  std::remove("model_tab.csv");
}

TEST_CASE("ensemble JSON exposes the verification surface") {
  EnsembleConfig cfg;
  cfg.model_name = "sinh";
  cfg.temporal_only = true;
  cfg.s_max = 5;
  cfg.n_traj = 2;
  cfg.thin = 50;
  EnsembleStats st = run_ensemble(cfg);
  std::string j = to_json(st);
  for (const char* key :
       {"\"model\"", "\"n_traj\"", "\"failures\"", "\"prediction\"",
        "\"stats\"", "\"per_traj\"", "\"rate_tdot\"", "\"ks\""}) {
    CAPTURE(key);
    CHECK(j.find(key) != std::string::npos);
  }
  std::string v = to_json(verify_regime(st, st.prediction));
  CHECK(v.find("\"claims\"") != std::string::npos);
  CHECK(v.find("\"any_fail\"") != std::string::npos);
}

TEST_CASE("svg plot emits a polyline") {
  std::string svg = line_plot_svg({0, 1, 2}, {1, 0, 1}, "probe");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}
