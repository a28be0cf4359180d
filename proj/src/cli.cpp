#include "dhlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dhlab/bubble.hpp"
#include "dhlab/check_suite.hpp"
#include "dhlab/conservation.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/field_io.hpp"
#include "dhlab/random_fields.hpp"
#include "dhlab/reports.hpp"
#include "dhlab/solver.hpp"

namespace dhlab {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kConfigVersion = 1;

// Schema-checked view of one JSON object. Every key read is recorded and
// finish() rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    return v->get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v->get<long long>();
  }

  bool flag(const std::string& key, std::optional<bool> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> fallback = std::nullopt) {
    const std::string s = text(key, std::move(fallback));
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(at(key), "expected one of " + list + ", got '" + s + "'");
    }
    return s;
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      if (!(*v)[k].is_number()) throw ConfigError(at(key) + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back((*v)[k].get<double>());
    }
    return out;
  }

  Point point(const std::string& key, Point fallback) {
    if (!has(key)) return fallback;
    const auto v = numbers(key);
    if (v.size() != 2) throw ConfigError(at(key), "expected [x, y]");
    return {v[0], v[1]};
  }

  Section object(const std::string& key) {
    const json* v = find(key, false);
    return Section(*v, at(key));
  }

  // Array of objects.
  std::vector<Section> objects(const std::string& key) {
    const json* v = find(key, false);
    if (!v->is_array()) throw ConfigError(at(key), "expected an array");
    std::vector<Section> out;
    for (std::size_t k = 0; k < v->size(); ++k) out.emplace_back((*v)[k], at(key) + "[" + std::to_string(k) + "]");
    return out;
  }

  const json& raw(const std::string& key) { return *find(key, false); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(at(k), "unknown key");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* find(const std::string& key, bool optional) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      if (optional) return nullptr;
      throw ConfigError(at(key), "missing required key");
    }
    return &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
}

void require_version(Section& root) {
  const long long v = root.integer("version");
  if (v != kConfigVersion) throw ConfigError("version", "unsupported config version " + std::to_string(v));
}

int positive_int(Section& s, const std::string& key, std::optional<long long> fallback = std::nullopt) {
  const long long v = s.integer(key, fallback);
  if (v <= 0 || v > 1 << 20) throw ConfigError(s.at(key), "expected a positive integer");
  return static_cast<int>(v);
}

double positive(Section& s, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const double v = s.number(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(s.at(key), "expected a positive number");
  return v;
}

struct GridSpec {
  Topology topology = Topology::Torus;
  double lx = 1, ly = 1;
  int nx = 32, ny = 32;
  std::optional<double> x0, y0;

  Grid build(int nx_override = 0) const {
    int gx = nx, gy = ny;
    if (nx_override > 0) {
      gx = nx_override;
      gy = static_cast<int>(std::lround(static_cast<double>(nx_override) * ly / lx));
    }
    try {
      if (x0 && y0) return make_grid(topology, lx, ly, gx, gy, *x0, *y0);
      return make_grid(topology, lx, ly, gx, gy);
    } catch (const InvalidArgument& e) {
      throw ConfigError("grid", e.what());
    }
  }
};

GridSpec read_grid(Section& root) {
  Section s = root.object("grid");
  GridSpec g;
  const std::string t = s.choice("topology", {"torus", "rectangle"});
  g.topology = topology_from_string(t);
  g.lx = positive(s, "lx");
  g.ly = positive(s, "ly", g.lx);
  g.nx = positive_int(s, "nx");
  g.ny = positive_int(s, "ny", g.nx);
  if (s.has("x0") != s.has("y0")) throw ConfigError(s.at(s.has("x0") ? "y0" : "x0"), "x0 and y0 go together");
  if (s.has("x0")) {
    g.x0 = s.number("x0");
    g.y0 = s.number("y0");
  }
  s.finish();
  g.build();
  return g;
}

SolverParams read_solver(Section& root) {
  SolverParams p;
  if (!root.has("solver")) return p;
  Section s = root.object("solver");
  p.step = s.number("step", 0.0);
  if (p.step < 0.0) throw ConfigError(s.at("step"), "expected a non-negative number");
  const long long iters = s.integer("max_iters", p.max_iters);
  if (iters < 0) throw ConfigError(s.at("max_iters"), "expected a non-negative integer");
  p.max_iters = static_cast<int>(iters);
  p.tol = s.number("tol", p.tol);
  if (!(p.tol >= 0.0)) throw ConfigError(s.at("tol"), "expected a non-negative number");
  p.psi_norm_target = s.number("psi_norm_target", 0.0);
  if (p.psi_norm_target < 0.0) throw ConfigError(s.at("psi_norm_target"), "expected a non-negative number");
  const long long seed = s.integer("seed", 1);
  if (seed < 0) throw ConfigError(s.at("seed"), "expected a non-negative integer");
  p.seed = static_cast<std::uint64_t>(seed);
  p.eps0 = positive(s, "eps0", p.eps0);
  const long long margin = s.integer("margin", p.margin);
  if (margin < 0) throw ConfigError(s.at("margin"), "expected a non-negative integer");
  p.margin = static_cast<int>(margin);
  s.finish();
  return p;
}

fs::path read_output_dir(Section& root, const std::string& override_dir, bool* snapshots = nullptr) {
  fs::path dir = "dhlab_out";
  if (root.has("output")) {
    Section s = root.object("output");
    dir = s.text("dir", dir.string());
    if (snapshots) *snapshots = s.flag("snapshots", *snapshots);
    s.finish();
  }
  if (!override_dir.empty()) dir = override_dir;
  return dir;
}

void prepare_output(const fs::path& dir, std::ostream& err) {
  if (ensure_directory(dir)) err << "created output directory " << dir.string() << '\n';
}

struct CommonFlags {
  std::string config;
  std::string out;
  bool json = false;
  std::optional<std::uint64_t> seed;
};

// ---------------------------------------------------------------- check

int cmd_check(const CommonFlags& flags, const std::string& fault, std::ostream& out, std::ostream& err) {
  CheckOptions opt;
  if (!fault.empty()) {
    if (fault != "g2-sign") {
      err << "unknown fault '" << fault << "'\n";
      return kExitConfig;
    }
    opt.fault = Fault::G2Sign;
  }
  if (flags.seed) opt.seed = static_cast<unsigned>(*flags.seed);
  const auto results = run_check_suite(opt);
  if (flags.json) {
    out << check_json(results).dump(2) << '\n';
  } else {
    out << check_table(results);
  }
  if (all_passed(results)) return kExitOk;
  for (const auto& r : results)
    if (!r.passed) err << "failed: " << r.name << '\n';
  return kExitFailure;
}

// ---------------------------------------------------------------- solve

struct Initial {
  MapField phi;
  SpinorAlongMap psi;
};

std::vector<double> north_pole(int comps) {
  std::vector<double> p(static_cast<std::size_t>(comps), 0.0);
  p.back() = 1.0;
  return p;
}

Initial read_initial(Section& root, const Grid& grid, int target_n, std::uint64_t seed) {
  Section s = root.object("initial");
  const std::string kind = s.choice("map", {"constant", "bubble", "elliptic", "random", "snapshot"});
  const int comps = target_n + 1;
  MapField phi;
  try {
    if (kind == "constant") {
      phi = MapField::constant(grid, north_pole(comps));
    } else if (kind == "bubble") {
      if (target_n != 2) throw ConfigError("target_n", "bubble initial data needs target_n = 2");
      if (grid.periodic()) throw UnsupportedTopology("bubble initial data needs a rectangle grid");
      BubbleSpec b;
      b.lambda = positive(s, "lambda", 1.0);
      b.center = s.point("center", {0.0, 0.0});
      phi = stereographic_bubble(b, grid);
    } else if (kind == "elliptic") {
      if (target_n != 2) throw ConfigError("target_n", "elliptic initial data needs target_n = 2");
      EllipticBubbleSpec e;
      e.scale = positive(s, "scale", 1.0);
      phi = elliptic_bubble(e, grid);
    } else if (kind == "random") {
      const double amp = s.number("amplitude", 0.1);
      VectorField raw = random_smooth_vector(grid, comps, seed);
      raw *= amp;
      for (std::size_t site = 0; site < raw.sites(); ++site) raw(site, comps - 1) += 1.0;
      phi = project_sphere(raw);
    } else {
      const Snapshot snap = read_snapshot(s.text("path"));
      if (snap.header.kind != FieldKind::Map) throw ConfigError(s.at("path"), "snapshot is not a map");
      phi = MapField(std::get<VectorField>(snap.field));
      if (!(phi.grid() == grid)) throw ConfigError(s.at("path"), "snapshot grid differs from the config grid");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(s.at("map"), e.what());
  }

  const std::string sk = s.choice("spinor", {"zero", "constant", "random"}, "zero");
  const double samp = s.number("spinor_amplitude", 1.0);
  SpinorAlongMap psi = SpinorAlongMap::zero(phi);
  if (sk == "constant") {
    SpinorField raw(grid, comps);
    for (std::size_t site = 0; site < raw.sites(); ++site) {
      raw(site, 0) = Spinor{{samp, 0.0}, {0.0, 0.0}};
      if (comps > 2) raw(site, 1) = Spinor{{0.0, 0.0}, {0.0, samp}};
    }
    psi = project_tangent(phi, raw);
  } else if (sk == "random") {
    SpinorField raw = random_smooth_spinor(grid, comps, seed + 1000u);
    raw *= samp;
    psi = project_tangent(phi, raw);
  }
  s.finish();
  return {std::move(phi), std::move(psi)};
}

int cmd_solve(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  if (flags.config.empty()) throw ConfigError("--config", "solve needs a config file");
  const json cfg = load_config(flags.config);
  Section root(cfg, "");
  require_version(root);
  const std::string mode = root.choice("mode", {"harmonic", "coupled", "vanishing"});
  SolverParams params = read_solver(root);
  if (flags.seed) params.seed = *flags.seed;
  bool snapshots = true;
  const fs::path dir = read_output_dir(root, flags.out, &snapshots);
  const long long tn = root.integer("target_n", 2);
  if (tn < 2 || tn > 64) throw ConfigError("target_n", "expected an integer >= 2");
  const int target_n = static_cast<int>(tn);

  if (mode == "vanishing") {
    Section p = root.object("probe");
    const double budget = p.number("budget");
    if (budget < 0.0) throw ConfigError(p.at("budget"), "expected a non-negative number");
    const int trials = positive_int(p, "trials", 8);
    ProbeOptions opt;
    opt.init = p.choice("init", {"random", "bubble"}, "random") == "bubble" ? ProbeInit::Bubble : ProbeInit::Random;
    opt.map_fraction = p.number("map_fraction", 0.5);
    if (opt.map_fraction < 0.0 || opt.map_fraction > 1.0) throw ConfigError(p.at("map_fraction"), "expected [0, 1]");
    p.finish();
    if (root.has("grid")) {
      const GridSpec gs = read_grid(root);
      opt.grid = gs.build();
    }
    if (target_n != 2) throw ConfigError("target_n", "the vanishing probe uses target_n = 2");
    root.finish();
    prepare_output(dir, err);
    const ProbeReport rep = vanishing_probe(budget, trials, params, opt);
    json report = probe_json(rep);
    report["mode"] = mode;
    write_text_file(dir / "probe.csv", probe_csv(rep));
    write_json_file(dir / "report.json", report);
    if (flags.json) {
      out << report.dump(2) << '\n';
    } else {
      out << report["summary"].get<std::string>() << '\n';
    }
    return kExitOk;
  }

  const GridSpec gs = read_grid(root);
  const Grid grid = gs.build();
  Initial init = read_initial(root, grid, target_n, params.seed);
  root.finish();
  prepare_output(dir, err);

  MapField phi;
  SpinorAlongMap psi;
  SolveTrace trace;
  if (mode == "harmonic") {
    HarmonicSolve r = relax_harmonic(init.phi, params);
    phi = std::move(r.phi);
    psi = SpinorAlongMap::zero(phi);
    trace = std::move(r.trace);
  } else {
    CoupledSolve r = relax_coupled(init.phi, init.psi, params);
    phi = std::move(r.phi);
    psi = std::move(r.psi);
    trace = std::move(r.trace);
  }
  write_text_file(dir / "trace.csv", trace_csv(trace));
  if (snapshots) {
    write_snapshot(dir / "map.bin", phi.values(), FieldKind::Map);
    write_snapshot(dir / "spinor.bin", psi.values());
  }
  const EnergyReport final_report = energies(phi, psi, params.margin);
  json report = {{"mode", mode},
                 {"status", trace.converged ? "converged" : "max_iters"},
                 {"converged", trace.converged},
                 {"iterations", trace.iterations},
                 {"step", trace.step},
                 {"stability_number", trace.stability},
                 {"monotonicity_violations", trace.monotonicity_violations},
                 {"warnings", trace.warnings},
                 {"nontrivial_spinor_exploratory", params.psi_norm_target > 0.0},
                 {"final", energy_report_json(final_report)},
                 {"final_tangential_residual",
                  {{"map", trace.rows.back().residual_map}, {"spinor", trace.rows.back().residual_spinor}}}};
  write_json_file(dir / "report.json", report);
  for (const auto& w : trace.warnings) err << "warning: " << w << '\n';
  if (flags.json) {
    out << report.dump(2) << '\n';
  } else {
    out << (trace.converged ? "converged" : "not converged") << " after " << trace.iterations
        << " iterations: e_map " << format_double(final_report.e_map) << ", tangential residual map "
        << format_double(trace.rows.back().residual_map) << ", spinor "
        << format_double(trace.rows.back().residual_spinor) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bubble

int cmd_bubble(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  if (flags.config.empty()) throw ConfigError("--config", "bubble needs a config file");
  const json cfg = load_config(flags.config);
  Section root(cfg, "");
  require_version(root);
  const GridSpec gs = read_grid(root);
  const Grid grid = gs.build();
  const fs::path dir = read_output_dir(root, flags.out);

  std::optional<ConcentrationFamily> family;
  if (root.has("family")) {
    Section f = root.object("family");
    const auto lambdas = f.numbers("lambdas");
    const Point center = f.point("center", {0.0, 0.0});
    const bool with_spinor = f.flag("with_spinor", true);
    f.finish();
    if (grid.periodic()) throw UnsupportedTopology("bubble families need a rectangle grid");
    try {
      family = concentration_family(lambdas, grid, with_spinor, center);
    } catch (const InvalidArgument& e) {
      throw ConfigError(f.at("lambdas"), e.what());
    }
  }
  std::vector<BubbleSpec> superposition;
  if (root.has("superposition")) {
    for (Section& b : root.objects("superposition")) {
      BubbleSpec spec;
      spec.center = b.point("center", {0.0, 0.0});
      spec.lambda = positive(b, "lambda");
      b.finish();
      superposition.push_back(spec);
    }
  }
  double delta = 0.5, big_r = 10.0;
  bool identity = false;
  if (root.has("identity")) {
    Section s = root.object("identity");
    delta = positive(s, "delta", delta);
    big_r = positive(s, "R", big_r);
    s.finish();
    identity = true;
  }
  double eps0 = kDefaultEps0, radius = 0.25;
  if (root.has("blowup")) {
    Section s = root.object("blowup");
    eps0 = positive(s, "eps0", eps0);
    radius = positive(s, "radius", radius);
    s.finish();
  }
  int reg_margin = kDefaultMargin;
  double reg_eps0 = eps0;
  if (root.has("regularity")) {
    Section s = root.object("regularity");
    const long long m = s.integer("margin", reg_margin);
    if (m < 0) throw ConfigError(s.at("margin"), "expected a non-negative integer");
    reg_margin = static_cast<int>(m);
    reg_eps0 = positive(s, "eps0", reg_eps0);
    s.finish();
  }
  std::string snap_kind;
  std::vector<double> snap_res;
  double snap_lambda = 1.0, snap_scale = 1.0;
  if (root.has("snapshots")) {
    Section s = root.object("snapshots");
    snap_kind = s.choice("kind", {"stereographic", "elliptic"});
    snap_res = s.numbers("resolutions");
    snap_lambda = positive(s, "lambda", 1.0);
    snap_scale = positive(s, "scale", 1.0);
    s.finish();
    for (double r : snap_res) {
      if (r != std::floor(r) || r < 8) throw ConfigError(s.at("resolutions"), "expected integers >= 8");
    }
  }
  root.finish();
  if (!family && superposition.empty() && snap_kind.empty()) {
    throw ConfigError("family", "config needs a family, a superposition or snapshots");
  }
  prepare_output(dir, err);

  json summary = {{"grid", grid_json(grid)}};
  if (family && identity) {
    const IdentityTable table = energy_identity_experiment(*family, delta, big_r);
    write_text_file(dir / "identity.csv", identity_csv(table));
    json rows = json::array();
    for (const auto& r : table.rows) {
      rows.push_back({{"lambda", r.lambda},
                      {"e_disk_over_8pi", r.e_disk / (8.0 * std::numbers::pi)},
                      {"e_annulus", r.e_annulus},
                      {"annulus_empty", r.annulus_empty},
                      {"e_spinor_disk", r.e_spinor_disk}});
    }
    summary["identity"] = rows;
    if (!flags.json) {
      for (const auto& r : table.rows) {
        out << "lambda " << format_double(r.lambda) << ": E_disk/8pi " << format_double(r.e_disk / (8.0 * std::numbers::pi))
            << ", E_annulus " << format_double(r.e_annulus) << (r.annulus_empty ? " (empty annulus)" : "") << '\n';
      }
    }
  }
  if (!superposition.empty() || family) {
    std::vector<BlowupCluster> clusters;
    if (!superposition.empty()) {
      const MapField phi = bubble_superposition(superposition, grid);
      clusters = detect_blowup_set(phi, nullptr, eps0, radius);
    } else {
      clusters = detect_blowup_set(*family, eps0, radius);
    }
    const json bj = blowup_json(clusters, eps0, radius);
    write_json_file(dir / "blowup.json", bj);
    summary["blowup_clusters"] = clusters.size();
    if (!flags.json) out << "blow-up clusters: " << clusters.size() << '\n';
  }
  if (family) {
    json reg = json::array();
    for (const auto& m : family->members) {
      const SpinorField* psi = family->with_spinor ? &m.psi.values() : nullptr;
      json r = regularity_json(epsilon_regularity_probe(m.phi, psi, reg_margin, reg_eps0));
      r["lambda"] = m.lambda;
      reg.push_back(r);
    }
    write_json_file(dir / "regularity.json", {{"spinor_is_test_field", family->with_spinor}, {"members", reg}});
  }
  if (!snap_kind.empty()) {
    json written = json::array();
    for (double r : snap_res) {
      const Grid g = gs.build(static_cast<int>(r));
      MapField phi;
      if (snap_kind == "stereographic") {
        if (g.periodic()) throw UnsupportedTopology("stereographic snapshots need a rectangle grid");
        BubbleSpec b;
        b.lambda = snap_lambda;
        phi = stereographic_bubble(b, g);
      } else {
        if (!g.periodic()) throw UnsupportedTopology("elliptic snapshots need a torus grid");
        EllipticBubbleSpec e;
        e.scale = snap_scale;
        phi = elliptic_bubble(e, g);
      }
      const std::string name = "map_nx" + std::to_string(g.nx()) + ".bin";
      write_snapshot(dir / name, phi.values(), FieldKind::Map);
      written.push_back(name);
    }
    summary["snapshots"] = written;
  }
  write_json_file(dir / "summary.json", summary);
  if (flags.json) out << summary.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- conserve

struct ConserveInput {
  MapField phi;
  SpinorAlongMap psi;
  std::string label;
};

ConserveInput load_pair(const std::string& arg) {
  const auto colon = arg.find(':');
  const std::string map_path = arg.substr(0, colon);
  const Snapshot ms = read_snapshot(map_path);
  if (ms.header.kind != FieldKind::Map) throw IoError("'" + map_path + "' is not a map snapshot");
  MapField phi(std::get<VectorField>(ms.field));
  SpinorAlongMap psi = SpinorAlongMap::zero(phi);
  if (colon != std::string::npos) {
    const std::string sp = arg.substr(colon + 1);
    const Snapshot ss = read_snapshot(sp);
    if (ss.header.kind != FieldKind::Spinor) throw IoError("'" + sp + "' is not a spinor snapshot");
    psi = SpinorAlongMap(phi, std::get<SpinorField>(ss.field));
  }
  return {std::move(phi), std::move(psi), arg};
}

MapField generated_map(const std::string& kind, const Grid& g, double lambda, double scale, std::uint64_t seed) {
  if (kind == "stereographic") {
    BubbleSpec b;
    b.lambda = lambda;
    return stereographic_bubble(b, g);
  }
  if (kind == "elliptic") {
    EllipticBubbleSpec e;
    e.scale = scale;
    return elliptic_bubble(e, g);
  }
  if (kind == "constant") return MapField::constant(g, north_pole(3));
  FourierSpec spec;
  spec.include_mean = true;
  return random_smooth_map(g, 2, seed, 1.0, spec);
}

int cmd_conserve(const CommonFlags& flags, const std::vector<std::string>& positional, bool potential_flag,
                 std::ostream& out, std::ostream& err) {
  std::vector<ConserveInput> inputs;
  bool potential = potential_flag;
  int margin = kDefaultMargin;
  fs::path dir = flags.out.empty() ? fs::path("dhlab_out") : fs::path(flags.out);
  if (!flags.config.empty()) {
    const json cfg = load_config(flags.config);
    Section root(cfg, "");
    require_version(root);
    potential = root.flag("potential", potential);
    const long long m = root.integer("margin", margin);
    if (m < 0) throw ConfigError("margin", "expected a non-negative integer");
    margin = static_cast<int>(m);
    dir = read_output_dir(root, flags.out);
    if (root.has("snapshots")) {
      const json& arr = root.raw("snapshots");
      if (!arr.is_array()) throw ConfigError("snapshots", "expected an array of paths");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        if (!arr[k].is_string()) throw ConfigError("snapshots[" + std::to_string(k) + "]", "expected a path");
        inputs.push_back(load_pair(arr[k].get<std::string>()));
      }
    }
    if (root.has("fields")) {
      Section f = root.object("fields");
      const std::string kind = f.choice("kind", {"stereographic", "elliptic", "constant", "random"});
      const double lambda = positive(f, "lambda", 1.0);
      const double scale = positive(f, "scale", 1.0);
      std::uint64_t seed = static_cast<std::uint64_t>(std::max(0LL, f.integer("seed", 1)));
      if (flags.seed) seed = *flags.seed;
      f.finish();
      const GridSpec gs = read_grid(root);
      std::vector<double> res{static_cast<double>(gs.nx)};
      if (root.has("resolutions")) res = root.numbers("resolutions");
      for (double r : res) {
        if (r != std::floor(r) || r < 8) throw ConfigError("resolutions", "expected integers >= 8");
        const Grid g = gs.build(static_cast<int>(r));
        MapField phi = generated_map(kind, g, lambda, scale, seed);
        SpinorAlongMap psi = SpinorAlongMap::zero(phi);
        inputs.push_back({std::move(phi), std::move(psi), kind + "@" + std::to_string(g.nx())});
      }
    } else if (root.has("grid") || root.has("resolutions")) {
      throw ConfigError(root.has("grid") ? "grid" : "resolutions", "only valid together with fields");
    }
    root.finish();
  }
  for (const auto& p : positional) inputs.push_back(load_pair(p));
  if (inputs.empty()) throw ConfigError("snapshots", "conserve needs snapshot paths or a config");
  std::sort(inputs.begin(), inputs.end(),
            [](const ConserveInput& a, const ConserveInput& b) { return a.phi.grid().nx() < b.phi.grid().nx(); });
  if (potential) {
    for (const auto& in : inputs) {
      if (!in.phi.grid().periodic()) {
        throw UnsupportedTopology("potential reconstruction needs a torus snapshot; '" + in.label + "' is a " +
                                  to_string(in.phi.grid().topology()));
      }
    }
  }
  prepare_output(dir, err);

  json rows = json::array();
  std::map<std::string, std::vector<std::pair<const Grid*, double>>> series;
  std::vector<std::string> order;
  auto record = [&](const std::string& q, const Grid& g, double norm) {
    rows.push_back({{"quantity", q}, {"grid", grid_json(g)}, {"h", g.h()}, {"norm", norm}});
    if (!series.count(q)) order.push_back(q);
    series[q].emplace_back(&g, norm);
  };
  for (const auto& in : inputs) {
    const Grid& g = in.phi.grid();
    const CoefficientMatrices c = coefficient_matrices(in.phi, in.psi);
    record("antisymmetry", g, antisymmetry_defect(c));
    record("laplacian", g, reconstruct_laplacian(in.phi, c, margin).norm);
    record("divergence", g, divergence_residual(c, margin).norm);
    if (potential) {
      const PotentialField m = frobenius_potential(c);
      record("wente", g, wente_residual(in.phi, m, margin).norm);
    }
  }
  write_json_file(dir / "residuals.json", {{"margin", margin}, {"rows", rows}});
  std::ostringstream csv;
  csv << "quantity,nx,h,norm,ratio\n";
  for (const auto& q : order) {
    const auto& s = series[q];
    for (std::size_t k = 0; k < s.size(); ++k) {
      csv << q << ',' << s[k].first->nx() << ',' << format_double(s[k].first->h()) << ','
          << format_double(s[k].second) << ',';
      if (k > 0 && s[k].second > 0.0) csv << format_double(s[k - 1].second / s[k].second);
      csv << '\n';
    }
  }
  write_text_file(dir / "refinement.csv", csv.str());
  if (flags.json) {
    out << json{{"margin", margin}, {"rows", rows}}.dump(2) << '\n';
  } else {
    out << csv.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirac-harmonic map laboratory"};
  app.name("dhlab");
  app.require_subcommand(1);
  CommonFlags flags;
  std::string fault;
  std::uint64_t seed = 0;
  std::vector<std::string> positional;
  bool potential = false;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", flags.config, "JSON experiment config");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_flag("--json", flags.json, "machine-readable output on stdout");
    sub->add_option("--seed", seed, "seed override");
  };
  CLI::App* check = app.add_subcommand("check", "run the invariant suite");
  add_common(check, false);
  check->add_option("--inject-fault", fault)->group("");
  CLI::App* solve = app.add_subcommand("solve", "relaxation runs and the vanishing probe");
  add_common(solve, true);
  CLI::App* bubble = app.add_subcommand("bubble", "concentration experiments");
  add_common(bubble, true);
  CLI::App* conserve = app.add_subcommand("conserve", "conservation-law residuals and refinement");
  add_common(conserve, true);
  conserve->add_option("snapshots", positional, "map.bin[:spinor.bin] snapshot paths");
  conserve->add_flag("--potential", potential, "also reconstruct the potential (torus only)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (CLI::App* sub : {check, solve, bubble, conserve}) {
    if (sub->parsed() && sub->count("--seed") > 0) flags.seed = seed;
  }

  try {
    if (check->parsed()) return cmd_check(flags, fault, out, err);
    if (solve->parsed()) return cmd_solve(flags, out, err);
    if (bubble->parsed()) return cmd_bubble(flags, out, err);
    return cmd_conserve(flags, positional, potential, out, err);
  } catch (const ConfigError& e) {
    err << "config error at " << e.key_path() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const UnsupportedTopology& e) {
    err << "topology mismatch: " << e.what() << '\n';
    return kExitTopology;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace dhlab
