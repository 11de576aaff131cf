// rwdiff: command-line front door for the Robertson-Walker relativistic
// diffusion simulator.  Subcommands: catalog, classify, simulate, ensemble,
// verify, plot-data.  Exit codes: 0 ok, 1 usage error, 2 numerical failure,
// 3 verification failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rwdiff/harness.hpp"
#include "rwdiff/io.hpp"

namespace {

using namespace rwdiff;

struct ModelFlags {
  std::string model = "constant";
  std::string model_file;
};

ExpansionModel resolve_model(const ModelFlags& mf, ModelSpec* spec_out = nullptr) {
  if (!mf.model_file.empty()) {
    if (spec_out) spec_out->family = "file:" + mf.model_file;
    return load_model_file(mf.model_file);
  }
  ModelSpec spec = parse_model_spec(mf.model);
  if (spec_out) *spec_out = spec;
  return catalog(spec.family, spec.params);
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty()) {
    std::cout << content;
  } else {
    write_text_file(out, content);
  }
}

int cmd_catalog() {
  const char* names[] = {"constant",  "power(1)",  "power(0.66666666666666663)",
                         "power_exp(1,0.5)", "sinh", "exp(1)",
                         "big_crunch_radiation"};
  std::printf("%-28s %-22s %-12s %-12s\n", "model", "growth", "I-", "I+");
  for (const char* n : names) {
    ModelSpec spec = parse_model_spec(n);
    ExpansionModel m = catalog(spec.family, spec.params);
    GrowthClass g = classify_growth(m);
    HorizonIntegrals hz = horizon_integrals(m);
    char growth[64];
    std::snprintf(growth, sizeof(growth), "%s(%g)", to_string(g.kind), g.value);
    auto horizon = [](double v, bool ind) -> std::string {
      if (ind) return "indet";
      if (v >= kInf) return "inf";
      char b[32];
      std::snprintf(b, sizeof(b), "%.6g", v);
      return b;
    };
    std::printf("%-28s %-22s %-12s %-12s\n", n, growth,
                horizon(hz.i_minus, hz.indeterminate_minus).c_str(),
                horizon(hz.i_plus, hz.indeterminate_plus).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic diffusion on Robertson-Walker spacetimes"};
  app.require_subcommand(1);

  ModelFlags mf;
  std::string fiber_flag = "r3";
  double sigma = 1, ds = 1e-3, s_max = 200, t0 = 1, a0 = 1;
  int d_flag = -1, n_traj = 64, thin = 1;
  std::uint64_t seed = 0;
  std::string out, config_file, in_file;

  auto add_model_flags = [&](CLI::App* c) {
    c->add_option("--model", mf.model, "catalog model spec, e.g. power(2)");
    c->add_option("--model-file", mf.model_file, "model definition file");
    c->add_option("--fiber", fiber_flag, "fiber spec {r,h,s}{d}, e.g. h3");
    c->add_option("--sigma", sigma, "noise strength");
    c->add_option("--d", d_flag, "fiber dimension override");
  };

  CLI::App* c_catalog = app.add_subcommand("catalog", "list catalog models");
  (void)c_catalog;

  CLI::App* c_classify = app.add_subcommand("classify", "predict the regime");
  add_model_flags(c_classify);
  c_classify->add_option("--out", out, "output path (default stdout)");

  CLI::App* c_simulate = app.add_subcommand("simulate", "one trajectory CSV");
  add_model_flags(c_simulate);
  c_simulate->add_option("--ds", ds, "proper-time step");
  c_simulate->add_option("--s-max", s_max, "proper-time budget");
  c_simulate->add_option("--seed", seed, "RNG seed");
  c_simulate->add_option("--thin", thin, "record every k-th step");
  c_simulate->add_option("--t0", t0, "initial coordinate time");
  c_simulate->add_option("--a0", a0, "initial a");
  c_simulate->add_option("--out", out, "CSV path; sidecars <out>.term.json, <out>.boundary.json");

  CLI::App* c_ensemble = app.add_subcommand("ensemble", "run an ensemble config");
  c_ensemble->add_option("--config", config_file, "key-value config file")->required();
  c_ensemble->add_option("--out", out, "stats JSON path (default stdout)");

  CLI::App* c_verify = app.add_subcommand("verify", "classify + ensemble + verdicts");
  c_verify->add_option("--config", config_file, "key-value config file")->required();
  c_verify->add_option("--out", out, "verdict JSON path (default stdout)");

  CLI::App* c_plot = app.add_subcommand("plot-data", "plottable series from a trajectory CSV");
  c_plot->add_option("--in", in_file, "trajectory CSV")->required();
  c_plot->add_option("--out", out, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(c_catalog)) return cmd_catalog();

    if (app.got_subcommand(c_classify)) {
      FiberKind fk;
      int d;
      parse_fiber_flag(fiber_flag, &fk, &d);
      if (d_flag > 0) d = d_flag;
      ExpansionModel m = resolve_model(mf);
      Fiber fiber = make_fiber(fk, d);
      RegimePrediction pred = predict_regimes(m, fiber.kappa, d, sigma);
      emit(out, to_json(pred));
      return 0;
    }

    if (app.got_subcommand(c_simulate)) {
      FiberKind fk;
      int d;
      parse_fiber_flag(fiber_flag, &fk, &d);
      if (d_flag > 0) d = d_flag;
      ExpansionModel m = resolve_model(mf);
      Fiber fiber = make_fiber(fk, d);
      StepParams p;
      p.sigma = sigma;
      p.d = d;
      p.ds = ds;
      Rng rng(seed, 0);
      Trajectory traj =
          simulate_full(make_temporal_state(0, t0, a0, m),
                        default_spatial_init(fiber), m, fiber, p, s_max, rng, thin);
      emit(out, trajectory_csv(traj));
      if (!out.empty()) {
        write_text_file(out + ".term.json", termination_json(traj.temporal));
        write_text_file(out + ".boundary.json",
                        boundary_json(boundary_limit(traj, m, fiber)));
      }
      return traj.temporal.terminated == Termination::NumericalFailure ? 2 : 0;
    }

    if (app.got_subcommand(c_ensemble) || app.got_subcommand(c_verify)) {
      EnsembleConfig cfg = ensemble_config_from(read_key_value(config_file));
      EnsembleStats stats = run_ensemble(cfg);
      if (app.got_subcommand(c_ensemble)) {
        emit(out, to_json(stats));
        return stats.run_failed ? 2 : 0;
      }
      VerdictReport rep = verify_regime(stats, stats.prediction);
      emit(out, to_json(rep));
      if (stats.run_failed) return 2;
      return rep.any_fail() ? 3 : 0;
    }

    if (app.got_subcommand(c_plot)) {
      CsvTable t = read_csv(in_file);
      int ci_s = t.column("s"), ci_tdot = t.column("tdot"),
          ci_clock = t.column("clock");
      if (ci_s < 0 || ci_tdot < 0 || ci_clock < 0) {
        std::cerr << "plot-data: not a trajectory CSV\n";
        return 1;
      }
      std::vector<double> s, logtdot, clock;
      for (const auto& row : t.rows) {
        s.push_back(row[ci_s]);
        logtdot.push_back(std::log(row[ci_tdot]));
        clock.push_back(row[ci_clock]);
      }
      std::string c1 = "s,log_tdot\n", c2 = "s,clock\n";
      for (size_t i = 0; i < s.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", s[i], logtdot[i]);
        c1 += buf;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", s[i], clock[i]);
        c2 += buf;
      }
      write_text_file(out + "_logtdot.csv", c1);
      write_text_file(out + "_clock.csv", c2);
      write_text_file(out + "_logtdot.svg", line_plot_svg(s, logtdot, "log tdot vs s"));

      // Theta components against the clock, when spatial columns exist.
      std::vector<int> th_cols;
      for (int i = 0;; ++i) {
        int c = t.column("th" + std::to_string(i));
        if (c < 0) break;
        th_cols.push_back(c);
      }
      if (!th_cols.empty()) {
        std::string hdr = "clock";
        for (size_t i = 0; i < th_cols.size(); ++i) hdr += ",th" + std::to_string(i);
        std::string c3 = hdr + "\n";
        for (const auto& row : t.rows) {
          char buf[48];
          std::snprintf(buf, sizeof(buf), "%.17g", row[ci_clock]);
          c3 += buf;
          for (int c : th_cols) {
            std::snprintf(buf, sizeof(buf), ",%.17g", row[c]);
            c3 += buf;
          }
          c3 += '\n';
        }
        write_text_file(out + "_theta.csv", c3);
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
