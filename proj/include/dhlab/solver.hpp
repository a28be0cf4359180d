#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhlab/sphere.hpp"

namespace dhlab {

struct SolverParams {
  double step = 0.0;  // pseudo-time step; 0 selects default_step(grid)
  int max_iters = 1000;
  double tol = 1e-6;
  double psi_norm_target = 0.0;  // hold the quartic spinor energy at this value when > 0
  std::uint64_t seed = 1;
  double eps0 = 1.0;
  int margin = kDefaultMargin;
};

// 0.2 h^2, inside the explicit limit h^2 / 4 of the five-point heat step.
double default_step(const Grid& grid);

// step * 4 / h^2, the explicit-Euler stability number of the five-point heat step (stable below 1).
double stability_number(double step, const Grid& grid);

// Residual columns are interior max norms of the tangential parts of r_phi and r_psi.
struct TraceRow {
  int iter = 0;
  double e_map = 0.0;
  double e_spinor = 0.0;
  double residual_map = 0.0;
  double residual_spinor = 0.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  int iterations = 0;  // steps taken, at most max_iters
  double step = 0.0;
  double stability = 0.0;
  int monotonicity_violations = 0;  // e_map increases after the transient
  std::vector<std::string> warnings;
};

struct HarmonicSolve {
  MapField phi;
  SolveTrace trace;
};

struct CoupledSolve {
  MapField phi;
  SpinorAlongMap psi;
  SolveTrace trace;
};

// Projected gradient flow phi <- project(phi + step (Lap phi + |dphi|^2 phi)).
// Rectangle boundary sites stay fixed. Throws DivergenceError when e_map exceeds
// ten times its initial value or becomes non-finite.
HarmonicSolve relax_harmonic(const MapField& phi0, const SolverParams& params);

// Descent on ||r_phi||^2 + ||r_psi||^2 with re-projection each step:
//   phi <- project(phi + step r_phi),   psi <- P_T(psi - step D(r_psi)),
// where D is the (self-adjoint) Dirac operator along phi. A zero spinor is a
// fixed point and reproduces relax_harmonic exactly.
CoupledSolve relax_coupled(const MapField& phi0, const SpinorAlongMap& psi0, const SolverParams& params);

std::string trace_csv(const SolveTrace& trace);

enum class ProbeInit { Random, Bubble };

struct ProbeOptions {
  ProbeInit init = ProbeInit::Random;
  double map_fraction = 0.5;  // share of the budget placed in e_map for random data
  double constant_threshold = 1e-6;
  Grid grid;  // defaults to the unit torus with 32 x 32 cells when empty
};

struct ProbeTrial {
  std::uint64_t seed = 0;
  double initial_e_map = 0.0;
  double initial_e_spinor = 0.0;
  double final_e_map = 0.0;
  double final_e_spinor = 0.0;
  int iterations = 0;
  bool converged = false;
  bool constant = false;
};

struct ProbeReport {
  double budget = 0.0;
  std::vector<ProbeTrial> trials;
  int constant_count() const;
  double constant_fraction() const;
};

// Runs relax_coupled (psi_norm_target forced to 0) from seeded data with
// e_map + e_spinor = budget, and counts trials whose final energy is below the
// constant threshold. Bubble init starts from a perturbed degree-two elliptic
// bubble, whose topological energy replaces the budget.
ProbeReport vanishing_probe(double budget, int trials, const SolverParams& params, const ProbeOptions& options = {});

nlohmann::json probe_json(const ProbeReport& report);
std::string probe_csv(const ProbeReport& report);

}  // namespace dhlab
