#pragma once

#include <map>
#include <string>
#include <vector>

#include "rwdiff/harness.hpp"

namespace rwdiff {

// "sinh", "power(2)", "power_exp(1,0.5)" -> family name + numeric params.
struct ModelSpec {
  std::string family;
  std::vector<double> params;
};
ModelSpec parse_model_spec(const std::string& text);

// Flat key-value files with '#' comments and section-prefixed keys
// ("model.family=sinh").
std::map<std::string, std::string> read_key_value(const std::string& path);
std::map<std::string, std::string> parse_key_value(const std::string& text);

// Model file: family/params/T keys, or a tabulated model given as a
// two-column CSV (t, alpha).
ExpansionModel load_model_file(const std::string& path);

EnsembleConfig ensemble_config_from(
    const std::map<std::string, std::string>& kv);

FiberKind parse_fiber_kind(char c);
// "--fiber h3" style: {r,h,s} followed by the dimension.
void parse_fiber_flag(const std::string& text, FiberKind* kind, int* d);

// Trajectory CSV: header "s,t,tdot,a,clock,conformal" plus, for full runs,
// "x0..x{n},th0..th{n}".  Values printed with %.17g (round-trip exact).
std::string trajectory_csv(const Trajectory& traj);
std::string temporal_csv(const TemporalPath& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int column(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

// JSON serialization with stable field order (criterion: byte-identical
// output across worker counts).
std::string to_json(const RegimePrediction& p);
std::string to_json(const EnsembleStats& s);
std::string to_json(const VerdictReport& r);
std::string termination_json(const TemporalPath& path);
std::string boundary_json(const BoundaryPoint& bp);

// Minimal polyline SVG of one series (tests consume the CSV, not this).
std::string line_plot_svg(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::string& title);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rwdiff
