#include "rwdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rwdiff {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad numeric value for " + what + ": '" + s + "'");
  }
}

ordered_json stat_json(const StatSummary& s) {
  ordered_json j;
  j["mean"] = s.mean;
  j["se"] = s.se;
  j["values"] = s.values;
  return j;
}

}  // namespace

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  std::string s = trim(text);
  if (s.empty()) throw std::invalid_argument("empty model spec");
  size_t open = s.find('(');
  if (open == std::string::npos) {
    spec.family = s;
    return spec;
  }
  if (s.back() != ')') {
    throw std::invalid_argument("bad model spec: '" + text + "'");
  }
  spec.family = trim(s.substr(0, open));
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::stringstream ss(inner);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    spec.params.push_back(to_double(trim(tok), "model parameter"));
  }
  return spec;
}

std::map<std::string, std::string> parse_key_value(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_key_value(const std::string& path) {
  return parse_key_value(read_text_file(path));
}

ExpansionModel load_model_file(const std::string& path) {
  std::string text = read_text_file(path);
  // Tabulated models: a two-column CSV (t, alpha), detected by its header.
  if (text.rfind("t,", 0) == 0 || text.rfind("t ,", 0) == 0) {
    CsvTable table = parse_csv(text);
    std::vector<double> t, a;
    for (const auto& row : table.rows) {
      if (row.size() < 2) continue;
      t.push_back(row[0]);
      a.push_back(row[1]);
    }
    return tabulated_model(std::move(t), std::move(a));
  }
  auto kv = parse_key_value(text);
  auto it = kv.find("family");
  if (it == kv.end()) throw std::invalid_argument("model file: missing 'family'");
  std::vector<double> params;
  if (kv.count("params")) {
    std::stringstream ss(kv.at("params"));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      params.push_back(to_double(trim(tok), "params"));
    }
  }
  ExpansionModel m = catalog(it->second, params);
  if (kv.count("T")) m.T = to_double(kv.at("T"), "T");
  return m;
}

FiberKind parse_fiber_kind(char c) {
  switch (c) {
    case 'r': return FiberKind::Euclidean;
    case 'h': return FiberKind::Hyperbolic;
    case 's': return FiberKind::Spherical;
    default: throw std::invalid_argument("fiber must start with r, h or s");
  }
}

void parse_fiber_flag(const std::string& text, FiberKind* kind, int* d) {
  if (text.size() < 2) throw std::invalid_argument("bad fiber spec: '" + text + "'");
  *kind = parse_fiber_kind(text[0]);
  *d = static_cast<int>(to_double(text.substr(1), "fiber dimension"));
  if (*d < 3) throw std::invalid_argument("fiber dimension must be >= 3");
}

EnsembleConfig ensemble_config_from(
    const std::map<std::string, std::string>& kv) {
  EnsembleConfig cfg;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("model.family")) {
    ModelSpec spec = parse_model_spec(*v);
    cfg.model_name = spec.family;
    cfg.model_params = spec.params;
  }
  if (auto* v = get("model.params")) {
    cfg.model_params.clear();
    std::stringstream ss(*v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      cfg.model_params.push_back(to_double(trim(tok), "model.params"));
    }
  }
  if (auto* v = get("fiber")) {
    parse_fiber_flag(*v, &cfg.fiber_kind, &cfg.d);
  }
  if (auto* v = get("d")) cfg.d = static_cast<int>(to_double(*v, "d"));
  if (auto* v = get("sigma")) cfg.sigma = to_double(*v, "sigma");
  if (auto* v = get("ds")) cfg.ds = to_double(*v, "ds");
  if (auto* v = get("s_max")) cfg.s_max = to_double(*v, "s_max");
  if (auto* v = get("n_traj")) cfg.n_traj = static_cast<int>(to_double(*v, "n_traj"));
  if (auto* v = get("thin")) cfg.thin = static_cast<int>(to_double(*v, "thin"));
  if (auto* v = get("seed")) cfg.seed = static_cast<std::uint64_t>(std::stoull(*v));
  if (auto* v = get("temporal_only")) cfg.temporal_only = (*v == "true" || *v == "1");
  if (auto* v = get("init.entrance")) cfg.entrance = (*v == "true" || *v == "1");
  if (auto* v = get("init.t0")) cfg.t0 = to_double(*v, "init.t0");
  if (auto* v = get("init.a0")) cfg.a0 = to_double(*v, "init.a0");
  if (auto* v = get("burn_in")) cfg.burn_in = to_double(*v, "burn_in");
  if (auto* v = get("return_level")) cfg.return_level = to_double(*v, "return_level");
  if (auto* v = get("tol_tail")) cfg.tol_tail = to_double(*v, "tol_tail");
  if (auto* v = get("workers")) cfg.workers = static_cast<int>(to_double(*v, "workers"));
  return cfg;
}

std::string temporal_csv(const TemporalPath& path) {
  std::string out = "s,t,tdot,a,clock,conformal\n";
  for (const auto& x : path.samples) {
    out += g17(x.s);
    out += ',';
    out += g17(x.t);
    out += ',';
    out += g17(x.tdot);
    out += ',';
    out += g17(x.a);
    out += ',';
    out += g17(x.clock);
    out += ',';
    out += g17(x.conformal);
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  int n = traj.fiber.ambient_dim;
  std::string out = "s,t,tdot,a,clock,conformal";
  for (int i = 0; i < n; ++i) out += ",x" + std::to_string(i);
  for (int i = 0; i < n; ++i) out += ",th" + std::to_string(i);
  out += '\n';
  for (size_t r = 0; r < traj.temporal.samples.size(); ++r) {
    const auto& x = traj.temporal.samples[r];
    const auto& sp = traj.spatial[r];
    out += g17(x.s);
    out += ',';
    out += g17(x.t);
    out += ',';
    out += g17(x.tdot);
    out += ',';
    out += g17(x.a);
    out += ',';
    out += g17(x.clock);
    out += ',';
    out += g17(x.conformal);
    for (int i = 0; i < n; ++i) {
      out += ',';
      out += g17(sp.x[i]);
    }
    for (int i = 0; i < n; ++i) {
      out += ',';
      out += g17(sp.theta[i]);
    }
    out += '\n';
  }
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::stringstream ss(text);
  std::string line;
  bool first = true;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string tok;
    if (first) {
      while (std::getline(ls, tok, ',')) table.header.push_back(trim(tok));
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) {
      row.push_back(to_double(trim(tok), "csv cell"));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

std::string to_json(const RegimePrediction& p) {
  ordered_json j;
  j["tdot_behavior"] = to_string(p.tdot_behavior);
  j["as_transient"] = p.as_transient;
  j["invariant_H"] = p.invariant_H;
  j["clock_convergent"] = p.clock_convergent;
  j["direction_behavior"] = to_string(p.direction_behavior);
  j["position_behavior"] = to_string(p.position_behavior);
  j["lifetime_finite"] = p.lifetime_finite;
  j["growth"] = {{"kind", to_string(p.growth.kind)}, {"value", p.growth.value}};
  j["horizons"] = {{"i_minus", p.horizons.i_minus},
                   {"i_plus", p.horizons.i_plus},
                   {"indeterminate_minus", p.horizons.indeterminate_minus},
                   {"indeterminate_plus", p.horizons.indeterminate_plus}};
  return j.dump(2) + "\n";
}

std::string to_json(const EnsembleStats& s) {
  ordered_json j;
  const EnsembleConfig& c = s.config;
  j["config"] = {{"model", c.model_name},
                 {"model_params", c.model_params},
                 {"fiber",
                  std::string(1, "rhs"[static_cast<int>(c.fiber_kind)]) +
                      std::to_string(c.d)},
                 {"sigma", c.sigma},
                 {"ds", c.ds},
                 {"s_max", c.s_max},
                 {"n_traj", c.n_traj},
                 {"thin", c.thin},
                 {"seed", c.seed},
                 {"temporal_only", c.temporal_only},
                 {"entrance", c.entrance},
                 {"t0", c.t0},
                 {"a0", c.a0},
                 {"burn_in", c.burn_in},
                 {"return_level", c.return_level}};
  j["n_traj"] = s.n_traj;
  j["failures"] = s.failures;
  j["run_failed"] = s.run_failed;
  j["prediction"] = ordered_json::parse(to_json(s.prediction));
  for (const auto& [name, stat] : s.stats) j["stats"][name] = stat_json(stat);
  j["ks"] = s.ks;
  ordered_json per = ordered_json::array();
  for (const auto& t : s.per_traj) {
    ordered_json e;
    e["terminated"] = to_string(t.terminated);
    e["rate_tdot"] = t.rate_tdot;
    e["rate_alpha"] = t.rate_alpha;
    e["rate_int_alpha"] = t.rate_int_alpha;
    e["return_count"] = t.return_count;
    e["clock_converging"] = t.clock_converging;
    e["clock_value"] = t.clock_value;
    e["final_s"] = t.final_s;
    e["final_t"] = t.final_t;
    e["final_tdot"] = t.final_tdot;
    e["final_a"] = t.final_a;
    e["max_pseudo_residual"] = t.max_pseudo_residual;
    e["max_constraint_residual"] = t.max_constraint_residual;
    if (!t.boundary_kind.empty()) {
      e["boundary_kind"] = t.boundary_kind;
      e["boundary_certificate"] = t.boundary_certificate;
      e["delta_inf"] = t.delta_inf;
      e["tail_ca_min"] = t.tail_ca_min;
      e["tail_ca_max"] = t.tail_ca_max;
      e["tail_delta_dev"] = t.tail_delta_dev;
      e["gc_unorm"] = t.gc_unorm;
      e["gc_vnorm"] = t.gc_vnorm;
      e["gc_uv"] = t.gc_uv;
      e["gc_residual"] = t.gc_residual;
      e["a_tail_dev"] = t.a_tail_dev;
    }
    per.push_back(e);
  }
  j["per_traj"] = per;
  return j.dump(2) + "\n";
}

std::string to_json(const VerdictReport& r) {
  ordered_json j;
  ordered_json claims = ordered_json::array();
  for (const auto& v : r.claims) {
    claims.push_back({{"claim", v.claim},
                      {"theory", v.theory},
                      {"empirical", v.empirical},
                      {"tolerance", v.tolerance},
                      {"outcome", v.outcome}});
  }
  j["claims"] = claims;
  j["any_fail"] = r.any_fail();
  return j.dump(2) + "\n";
}

std::string termination_json(const TemporalPath& path) {
  ordered_json j;
  j["terminated"] = to_string(path.terminated);
  j["steps"] = path.steps;
  j["final_s"] = path.samples.empty() ? 0.0 : path.samples.back().s;
  j["final_t"] = path.samples.empty() ? 0.0 : path.samples.back().t;
  return j.dump(2) + "\n";
}

std::string boundary_json(const BoundaryPoint& bp) {
  ordered_json j;
  j["kind"] = to_string(bp.kind);
  auto vec = [](const Vec& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
  };
  j["x_inf"] = vec(bp.x_inf);
  j["theta_inf"] = vec(bp.theta_inf);
  j["U"] = vec(bp.U);
  j["V"] = vec(bp.V);
  j["delta_inf"] = bp.delta_inf;
  j["certificate"] = bp.certificate;
  j["diagnostics"] = bp.diagnostics;
  return j.dump(2) + "\n";
}

std::string line_plot_svg(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::string& title) {
  const double W = 640, H = 480, m = 50;
  double x0 = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
  double x1 = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
  double y0 = y.empty() ? 0 : *std::min_element(y.begin(), y.end());
  double y1 = y.empty() ? 1 : *std::max_element(y.begin(), y.end());
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
     << "</text>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m
     << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\""
     << H - m << "\" stroke=\"black\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
    double px = m + (x[i] - x0) / (x1 - x0) * (W - 2 * m);
    double py = H - m - (y[i] - y0) / (y1 - y0) * (H - 2 * m);
    os << px << "," << py << " ";
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace rwdiff
