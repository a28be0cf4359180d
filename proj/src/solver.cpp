#include "dhlab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "dhlab/bubble.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/random_fields.hpp"

namespace dhlab {

namespace {

constexpr int kTransient = 10;
constexpr double kTangencyAbort = 1e-8;

bool all_zero(const SpinorField& psi) {
  for (const Spinor& s : psi.data())
    if (!(s.c0 == Complex{} && s.c1 == Complex{})) return false;
  return true;
}

// The discrete residuals carry an O(h^2) normal component that the projected
// iteration cannot remove; convergence is judged on the tangential part.
VectorField tangential_part(const MapField& phi, const VectorField& v) {
  VectorField out = v;
  const int K = phi.ambient_dim();
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const auto p = phi.at(s);
    double n = 0.0;
    for (int c = 0; c < K; ++c) n += p[c] * out(s, c);
    for (int c = 0; c < K; ++c) out(s, c) -= n * p[c];
  }
  return out;
}

struct Evaluation {
  VectorField r_map;
  SpinorField r_spinor;  // empty when psi is identically zero
  TraceRow row;
};

Evaluation evaluate(const MapField& phi, const SpinorField* psi, int margin) {
  Evaluation ev;
  ev.r_map = harmonic_tension(phi);
  ev.row.e_map = quadrature(map_energy_density(phi));
  if (psi && !all_zero(*psi)) {
    ev.r_map += spinor_source(phi, *psi);
    ev.r_spinor = dirac_along_map(phi, *psi);
    ev.row.e_spinor = quadrature(spinor_energy_density(*psi));
    ev.row.residual_spinor = interior_max_norm(project_tangent_raw(phi, ev.r_spinor), margin);
  }
  ev.row.residual_map = interior_max_norm(tangential_part(phi, ev.r_map), margin);
  return ev;
}

bool row_converged(const TraceRow& r, double tol) {
  const double bound = tol * (1.0 + r.e_map);
  return r.residual_map <= bound && r.residual_spinor <= bound;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shared loop; psi == nullptr is the harmonic flow.
struct LoopState {
  MapField phi;
  std::optional<SpinorField> psi;
  SolveTrace trace;
};

LoopState run(const MapField& phi0, const SpinorField* psi0, const SolverParams& params) {
  const Grid& g = phi0.grid();
  if (params.max_iters < 0) throw InvalidArgument("solver: max_iters must be non-negative");
  if (!(params.tol >= 0.0)) throw InvalidArgument("solver: tol must be non-negative");
  if (params.psi_norm_target < 0.0) throw InvalidArgument("solver: psi_norm_target must be non-negative");
  const double step = params.step > 0.0 ? params.step : default_step(g);

  LoopState st{phi0, psi0 ? std::optional<SpinorField>(*psi0) : std::nullopt, {}};
  st.trace.step = step;
  st.trace.stability = stability_number(step, g);
  if (st.trace.stability >= 1.0) {
    st.trace.warnings.push_back("step exceeds the explicit stability heuristic (" + fmt(st.trace.stability) + ")");
  }

  const int K = phi0.ambient_dim();
  double e_initial = 0.0;
  bool warned_monotone = false;
  for (int iter = 0;; ++iter) {
    const SpinorField* psi = st.psi ? &*st.psi : nullptr;
    Evaluation ev = evaluate(st.phi, psi, params.margin);
    ev.row.iter = iter;
    if (!std::isfinite(ev.row.e_map) || !std::isfinite(ev.row.e_spinor) || !std::isfinite(ev.row.residual_map) ||
        !std::isfinite(ev.row.residual_spinor)) {
      throw DivergenceError("solver: non-finite state at iteration " + std::to_string(iter));
    }
    if (iter == 0) {
      e_initial = ev.row.e_map;
    } else {
      if (ev.row.e_map > 10.0 * e_initial + 1e-8) {
        throw DivergenceError("solver: e_map grew from " + fmt(e_initial) + " to " + fmt(ev.row.e_map) +
                              " at iteration " + std::to_string(iter));
      }
      const double prev = st.trace.rows.back().e_map;
      if (iter > kTransient && ev.row.e_map > prev * (1.0 + 1e-12) + 1e-15) {
        ++st.trace.monotonicity_violations;
        if (!warned_monotone) {
          st.trace.warnings.push_back("e_map increased at iteration " + std::to_string(iter));
          warned_monotone = true;
        }
      }
    }
    st.trace.rows.push_back(ev.row);
    if (row_converged(ev.row, params.tol)) {
      st.trace.converged = true;
      break;
    }
    if (iter == params.max_iters) break;

    // Map step on updatable sites.
    VectorField next = st.phi.values();
    for (int j = 0; j < g.sites_y(); ++j) {
      for (int i = 0; i < g.sites_x(); ++i) {
        if (!g.interior(i, j, 1)) continue;
        const std::size_t s = g.index(i, j);
        for (int c = 0; c < K; ++c) next(s, c) += step * ev.r_map(s, c);
      }
    }
    MapField phi_next = project_sphere(next);
    if (g.topology() == Topology::Rectangle) {
      // Renormalising can move fixed boundary values by an ulp; put them back.
      VectorField held = phi_next.values();
      for (int j = 0; j < g.sites_y(); ++j)
        for (int i = 0; i < g.sites_x(); ++i)
          if (!g.interior(i, j, 1))
            for (int c = 0; c < K; ++c) held.at(i, j, c) = st.phi.values().at(i, j, c);
      phi_next = MapField(std::move(held));
    }

    if (st.psi && ev.r_spinor.sites() > 0) {
      const SpinorField grad = dirac_along_map(st.phi, ev.r_spinor);
      SpinorField raw = *st.psi;
      for (int j = 0; j < g.sites_y(); ++j) {
        for (int i = 0; i < g.sites_x(); ++i) {
          if (!g.interior(i, j, 1)) continue;
          const std::size_t s = g.index(i, j);
          for (int c = 0; c < K; ++c) raw(s, c) -= step * grad(s, c);
        }
      }
      SpinorField projected = project_tangent_raw(phi_next, raw);
      if (params.psi_norm_target > 0.0) {
        const double e = quadrature(spinor_energy_density(projected));
        if (e > 0.0) projected *= std::pow(params.psi_norm_target / e, 0.25);
      }
      const double defect = SpinorAlongMap::tangency_defect(phi_next, projected);
      if (!(defect <= kTangencyAbort)) {
        throw DivergenceError("solver: tangency defect " + fmt(defect) + " after projection at iteration " +
                              std::to_string(iter));
      }
      st.psi = std::move(projected);
    }
    st.phi = std::move(phi_next);
    st.trace.iterations = iter + 1;
  }
  return st;
}

}  // namespace

double default_step(const Grid& grid) { return 0.2 * grid.h() * grid.h(); }

double stability_number(double step, const Grid& grid) { return step * 4.0 / (grid.h() * grid.h()); }

HarmonicSolve relax_harmonic(const MapField& phi0, const SolverParams& params) {
  LoopState st = run(phi0, nullptr, params);
  return {std::move(st.phi), std::move(st.trace)};
}

CoupledSolve relax_coupled(const MapField& phi0, const SpinorAlongMap& psi0, const SolverParams& params) {
  if (!(phi0.grid() == psi0.grid())) throw PreconditionError("relax_coupled: fields live on different grids");
  LoopState st = run(phi0, &psi0.values(), params);
  SpinorAlongMap psi(st.phi, std::move(*st.psi));
  return {std::move(st.phi), std::move(psi), std::move(st.trace)};
}

std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream os;
  os << "iter,e_map,e_spinor,residual_map,residual_spinor\n";
  for (const auto& r : trace.rows) {
    os << r.iter << ',' << fmt(r.e_map) << ',' << fmt(r.e_spinor) << ',' << fmt(r.residual_map) << ','
       << fmt(r.residual_spinor) << '\n';
  }
  return os.str();
}

int ProbeReport::constant_count() const {
  int n = 0;
  for (const auto& t : trials) n += t.constant ? 1 : 0;
  return n;
}

double ProbeReport::constant_fraction() const {
  return trials.empty() ? 0.0 : static_cast<double>(constant_count()) / static_cast<double>(trials.size());
}

namespace {

MapField perturbed_north(const VectorField& v, double s) {
  VectorField raw = v;
  raw *= s;
  for (std::size_t site = 0; site < raw.sites(); ++site) raw(site, 2) += 1.0;
  return project_sphere(raw);
}

// Amplitude s with e_map(project(e_z + s v)) = target, by doubling then bisection.
MapField map_with_energy(const VectorField& v, double target) {
  auto energy = [&](double s) { return quadrature(map_energy_density(perturbed_north(v, s))); };
  double lo = 0.0, hi = 1e-3;
  for (int k = 0; energy(hi) < target; ++k) {
    if (k > 60) throw InvalidArgument("vanishing_probe: cannot reach the requested map energy");
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (energy(mid) < target ? lo : hi) = mid;
  }
  return perturbed_north(v, 0.5 * (lo + hi));
}

SpinorAlongMap spinor_with_energy(const MapField& phi, std::uint64_t seed, double target) {
  if (target <= 0.0) return SpinorAlongMap::zero(phi);
  SpinorField w = project_tangent_raw(phi, random_smooth_spinor(phi.grid(), phi.ambient_dim(), seed));
  const double e = quadrature(spinor_energy_density(w));
  if (!(e > 0.0)) return SpinorAlongMap::zero(phi);
  w *= std::pow(target / e, 0.25);
  return SpinorAlongMap(phi, std::move(w));
}

}  // namespace

ProbeReport vanishing_probe(double budget, int trials, const SolverParams& params, const ProbeOptions& options) {
  if (!(budget >= 0.0)) throw InvalidArgument("vanishing_probe: budget must be non-negative");
  if (trials < 0) throw InvalidArgument("vanishing_probe: trial count must be non-negative");
  if (options.map_fraction < 0.0 || options.map_fraction > 1.0)
    throw InvalidArgument("vanishing_probe: map_fraction must lie in [0, 1]");
  const Grid grid = options.grid.size() > 0 ? options.grid : make_grid(Topology::Torus, 1.0, 1.0, 32, 32, 0.0, 0.0);
  SolverParams p = params;
  p.psi_norm_target = 0.0;

  ProbeReport rep;
  rep.budget = budget;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = params.seed + static_cast<std::uint64_t>(t);
    MapField phi;
    SpinorAlongMap psi;
    if (options.init == ProbeInit::Bubble) {
      EllipticBubbleSpec spec;
      VectorField raw = elliptic_bubble(spec, grid).values();
      VectorField noise = random_smooth_vector(grid, 3, seed);
      noise *= 0.05;
      raw += noise;
      phi = project_sphere(raw);
      const double rest = budget - quadrature(map_energy_density(phi));
      psi = spinor_with_energy(phi, seed ^ 0x9e3779b97f4a7c15ULL, rest);
    } else if (budget == 0.0) {
      const double north[3] = {0.0, 0.0, 1.0};
      phi = MapField::constant(grid, north);
      psi = SpinorAlongMap::zero(phi);
    } else {
      phi = map_with_energy(random_smooth_vector(grid, 3, seed), options.map_fraction * budget);
      psi = spinor_with_energy(phi, seed ^ 0x9e3779b97f4a7c15ULL, (1.0 - options.map_fraction) * budget);
    }
    ProbeTrial trial;
    trial.seed = seed;
    trial.initial_e_map = quadrature(map_energy_density(phi));
    trial.initial_e_spinor = quadrature(spinor_energy_density(psi.values()));
    const CoupledSolve out = relax_coupled(phi, psi, p);
    const TraceRow& last = out.trace.rows.back();
    trial.final_e_map = last.e_map;
    trial.final_e_spinor = last.e_spinor;
    trial.iterations = out.trace.iterations;
    trial.converged = out.trace.converged;
    trial.constant = last.e_map + last.e_spinor < options.constant_threshold;
    rep.trials.push_back(trial);
  }
  return rep;
}

nlohmann::json probe_json(const ProbeReport& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : report.trials) {
    trials.push_back({{"seed", t.seed},
                      {"initial_e_map", t.initial_e_map},
                      {"initial_e_spinor", t.initial_e_spinor},
                      {"final_e_map", t.final_e_map},
                      {"final_e_spinor", t.final_e_spinor},
                      {"iterations", t.iterations},
                      {"converged", t.converged},
                      {"constant", t.constant}});
  }
  return {{"budget", report.budget},
          {"constant", report.constant_count()},
          {"trials", report.trials.size()},
          {"summary", std::to_string(report.constant_count()) + "/" + std::to_string(report.trials.size()) +
                          " constant"},
          {"runs", trials}};
}

std::string probe_csv(const ProbeReport& report) {
  std::ostringstream os;
  os << "seed,initial_e_map,initial_e_spinor,final_e_map,final_e_spinor,iterations,converged,constant\n";
  for (const auto& t : report.trials) {
    os << t.seed << ',' << fmt(t.initial_e_map) << ',' << fmt(t.initial_e_spinor) << ',' << fmt(t.final_e_map)
       << ',' << fmt(t.final_e_spinor) << ',' << t.iterations << ',' << (t.converged ? 1 : 0) << ','
       << (t.constant ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace dhlab
