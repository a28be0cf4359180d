// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dhlab/bubble.hpp"
#include "dhlab/check_suite.hpp"
#include "dhlab/conservation.hpp"
#include "dhlab/random_fields.hpp"
#include "dhlab/solver.hpp"
#include "oracles.hpp"

using namespace dhlab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Grid unit_torus(int nx) { return make_grid(Topology::Torus, 1, 1, nx, nx, 0, 0); }

// Shared between criteria 6/10 and 8/10.
IdentityTable identity_run() {
  const Grid g = make_grid(Topology::Rectangle, 8, 8, 1024, 1024);
  return energy_identity_experiment(concentration_family({0.2, 0.1, 0.05}, g, true), 0.5, 10.0);
}

SolverParams probe_params() {
  SolverParams p;
  p.max_iters = 20000;
  p.tol = 1e-9;
  p.seed = 2024;
  return p;
}

Outcome algebra() {
  const auto r = run_check_suite({});
  double worst = 0.0;
  bool ok = true;
  for (const auto& c : r) {
    if (c.name == "identity (curvature)" || c.name == "identity chain (divergence)") continue;
    ok = ok && c.passed && c.value <= 1e-12;
    worst = std::max(worst, c.value);
  }
  return {ok, fmt("worst relative defect %.3e <= 1e-12", worst)};
}

Outcome curvature_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Grid g = unit_torus(10);
    FourierSpec spec;
    spec.include_mean = true;
    const MapField phi = random_smooth_map(g, 2, seed, 1.5, spec);
    const SpinorAlongMap psi = project_tangent(phi, random_smooth_spinor(g, 3, seed + 100));
    worst = std::max(worst, relative_difference(curvature_term(phi, psi), curvature_term_extrinsic(phi, psi)));
  }
  return {worst <= 1e-10, fmt("5 x 100 sites, relative difference %.3e <= 1e-10", worst)};
}

Outcome identity_chain() {
  const CheckResult r = check_identity_chain(7, 128);
  return {r.passed && r.value <= 1e-8, fmt("nx = 128, relative difference %.3e <= 1e-8", r.value)};
}

Outcome conservation_refinement() {
  std::vector<double> div, lap, wente;
  for (int nx : {128, 256, 512}) {
    const MapField phi = stereographic_bubble({}, make_grid(Topology::Rectangle, 8, 8, nx, nx));
    const CoefficientMatrices c = coefficient_matrices(phi, SpinorAlongMap::zero(phi));
    div.push_back(divergence_residual(c).norm);
    lap.push_back(reconstruct_laplacian(phi, c).norm);
    const MapField e = elliptic_bubble({}, unit_torus(nx));
    const CoefficientMatrices ce = coefficient_matrices(e, SpinorAlongMap::zero(e));
    wente.push_back(wente_residual(e, frobenius_potential(ce)).norm);
  }
  double worst = 1e300;
  std::string detail = "ratios";
  for (const auto* s : {&div, &lap, &wente}) {
    for (std::size_t k = 1; k < s->size(); ++k) {
      const double ratio = (*s)[k - 1] / (*s)[k];
      worst = std::min(worst, ratio);
      detail += fmt(" %.2f", ratio);
    }
    detail += " |";
  }
  detail.pop_back();
  detail += fmt("(divergence, laplacian, wente); min %.2f >= 3.5", worst);
  return {worst >= 3.5, detail};
}

Outcome bubble_energy() {
  const MapField phi = stereographic_bubble({}, make_grid(Topology::Rectangle, 16, 16, 512, 512));
  const double e = quadrature(map_energy_density(phi));
  const double target = oracle::bubble_disk(1.0, 8.0);  // 8 pi 64/65
  const double local = local_energy(phi, nullptr, {0, 0}, 1.0).map;
  const double d1 = oracle::rel(e, target), d2 = oracle::rel(local, 4 * oracle::pi);
  return {d1 <= 0.01 && d2 <= 0.02,
          fmt("E = %.5f", e) + fmt(" (rel %.2e <= 0.01),", d1) + fmt(" E(r<1) = %.5f", local) +
              fmt(" (rel %.2e <= 0.02)", d2)};
}

Outcome energy_identity(const IdentityTable& t) {
  const double pinned[] = {0.862, 0.962, 0.990};
  bool ok = t.rows.size() == 3;
  std::string detail = "E_disk/8pi";
  double prev_annulus = 1e300;
  for (std::size_t k = 0; k < t.rows.size() && k < 3; ++k) {
    const IdentityRow& r = t.rows[k];
    const double ratio = r.e_disk / (8 * oracle::pi);
    const double q = r.delta / r.lambda, closed = q * q / (1 + q * q);
    ok = ok && std::abs(ratio - closed) <= 0.02 && std::abs(ratio - pinned[k]) <= 0.02;
    ok = ok && r.e_annulus <= prev_annulus;
    prev_annulus = r.e_annulus;
    detail += fmt(" %.4f", ratio) + fmt("/%.3f", closed);
  }
  const double last = t.rows.empty() ? 1e300 : t.rows.back().e_annulus;
  ok = ok && last < 0.02 * 8 * oracle::pi;
  detail += fmt("; E_annulus last %.3e < 0.02*8pi", last);
  int empty = 0;
  for (const auto& r : t.rows) empty += r.annulus_empty ? 1 : 0;
  if (empty) detail += " (" + std::to_string(empty) + " empty annuli, lambda R >= delta)";
  return {ok, detail};
}

Outcome spinor_scaling() {
  const Grid g = make_grid(Topology::Rectangle, 8, 8, 512, 512);
  const auto fam = concentration_family({0.2, 0.1, 0.05}, g, true);
  std::vector<double> e;
  for (const auto& m : fam.members) e.push_back(quadrature(spinor_energy_density(m.psi.values())));
  double spread = 0.0;
  for (double v : e) spread = std::max(spread, oracle::rel(v, e.front()));
  return {spread <= 0.02, fmt("int |psi|^4 = %.4f", e[0]) + fmt(" %.4f", e[1]) + fmt(" %.4f", e[2]) +
                              fmt(", spread %.2e <= 0.02", spread)};
}

ProbeReport probe_run() { return vanishing_probe(0.05, 8, probe_params()); }

Outcome vanishing(const ProbeReport& small) {
  bool ok = small.constant_count() == 8 && small.trials.size() == 8;
  double worst = 0.0;
  for (const auto& t : small.trials) worst = std::max(worst, t.final_e_map + t.final_e_spinor);
  ok = ok && worst < 1e-6;

  SolverParams p = probe_params();
  p.max_iters = 2000;
  ProbeOptions o;
  o.init = ProbeInit::Bubble;
  const ProbeReport big = vanishing_probe(50.0, 2, p, o);
  double retained = 0.0;
  for (const auto& t : big.trials) retained = std::max(retained, t.final_e_map);
  ok = ok && retained > 1.0;
  return {ok, std::to_string(small.constant_count()) + "/8 constant at budget 0.05" +
                  fmt(", max final energy %.2e < 1e-6", worst) + fmt("; budget 50 keeps e_map %.3f > 1", retained)};
}

Outcome fixed_point() {
  const MapField phi = stereographic_bubble({}, make_grid(Topology::Rectangle, 8, 8, 64, 64));
  SolverParams p;
  p.max_iters = 1000;
  p.tol = 1e-14;
  const CoupledSolve r = relax_coupled(phi, SpinorAlongMap::zero(phi), p);
  const auto& rows = r.trace.rows;
  const double r0 = std::max(rows.front().residual_map, rows.front().residual_spinor);
  double rmax = 0.0;
  for (const auto& row : rows) rmax = std::max({rmax, row.residual_map, row.residual_spinor});
  const double de = oracle::rel(rows.back().e_map, rows.front().e_map);
  const bool ok = r.trace.iterations == 1000 && rmax <= 10 * r0 && de <= 0.01;
  return {ok, fmt("max residual %.3e", rmax) + fmt(" <= 10 x %.3e,", r0) + fmt(" e_map drift %.2e <= 0.01", de)};
}

Outcome determinism(const IdentityTable& first_identity, const ProbeReport& first_probe) {
  const bool a = identity_csv(first_identity) == identity_csv(identity_run());
  const bool b = probe_csv(first_probe) == probe_csv(probe_run());
  return {a && b, std::string("identity csv ") + (a ? "identical" : "differs") + ", probe csv " +
                      (b ? "identical" : "differs")};
}

}  // namespace

int main() {
  IdentityTable identity;
  ProbeReport probe;
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "algebraic suite", 5, algebra},
      {2, "curvature identity", 10, curvature_identity},
      {3, "divergence identity chain", 30, identity_chain},
      {4, "conservation law refinement", 120, conservation_refinement},
      {5, "bubble energy oracle", 60, bubble_energy},
      {6, "energy identity", 300,
       [&] {
         identity = identity_run();
         return energy_identity(identity);
       }},
      {7, "spinor scaling", 60, spinor_scaling},
      {8, "vanishing probe", 600,
       [&] {
         probe = probe_run();
         return vanishing(probe);
       }},
      {9, "solver fixed point", 300, fixed_point},
      {10, "determinism", 900, [&] { return determinism(identity, probe); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt <= c.limit_s;
    const bool passed = o.passed && in_time;
    failures += passed ? 0 : 1;
    std::printf("%s  %2d  %-28s %s  [%.1f s <= %.0f s]\n", passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                c.limit_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
