#include <gtest/gtest.h>

#include "dhlab/bubble.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/random_fields.hpp"
#include "dhlab/solver.hpp"

using namespace dhlab;

namespace {

Grid unit_torus(int nx = 16) { return make_grid(Topology::Torus, 1, 1, nx, nx, 0, 0); }

MapField perturbed(const Grid& g, double amp, std::uint64_t seed) {
  VectorField v = random_smooth_vector(g, 3, seed);
  v *= amp;
  for (std::size_t s = 0; s < v.sites(); ++s) v(s, 2) += 1.0;
  return project_sphere(v);
}

}  // namespace

TEST(Solver, ConstantMapReturnsImmediately) {
  const Grid g = unit_torus();
  const double pt[3] = {0, 0, 1};
  const HarmonicSolve r = relax_harmonic(MapField::constant(g, pt), {});
  EXPECT_TRUE(r.trace.converged);
  EXPECT_EQ(r.trace.iterations, 0);
  EXPECT_EQ(r.trace.rows.size(), 1u);
  EXPECT_EQ(r.trace.rows[0].residual_map, 0.0);
}

TEST(Solver, SmallPerturbationRelaxesToConstant) {
  const Grid g = unit_torus();
  SolverParams p;
  p.max_iters = 4000;
  p.tol = 1e-7;
  const HarmonicSolve r = relax_harmonic(perturbed(g, 0.05, 3), p);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LT(r.trace.rows.back().e_map, 1e-8);
  EXPECT_EQ(r.trace.monotonicity_violations, 0);
  EXPECT_LE(r.trace.iterations, p.max_iters);
}

TEST(Solver, BubbleWithFixedBoundaryReachesTolerance) {
  const Grid g = make_grid(Topology::Rectangle, 4, 4, 32, 32);
  const MapField phi0 = stereographic_bubble({}, g);
  SolverParams p;
  p.max_iters = 20000;
  p.tol = 1e-5;
  const HarmonicSolve r = relax_harmonic(phi0, p);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_NEAR(r.trace.rows.back().e_map, r.trace.rows.front().e_map, 0.01 * r.trace.rows.front().e_map);
  // Boundary ring untouched.
  for (int i = 0; i <= g.nx(); ++i)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(r.phi.values().at(i, 0, c), phi0.values().at(i, 0, c));
}

TEST(Solver, ZeroSpinorReproducesHarmonicFlowBitwise) {
  const Grid g = unit_torus();
  const MapField phi0 = perturbed(g, 0.3, 5);
  SolverParams p;
  p.max_iters = 200;
  p.tol = 0;
  const HarmonicSolve h = relax_harmonic(phi0, p);
  const CoupledSolve c = relax_coupled(phi0, SpinorAlongMap::zero(phi0), p);
  EXPECT_EQ(h.phi.values().data(), c.phi.values().data());
  ASSERT_EQ(h.trace.rows.size(), c.trace.rows.size());
  for (std::size_t k = 0; k < h.trace.rows.size(); ++k) {
    EXPECT_EQ(h.trace.rows[k].e_map, c.trace.rows[k].e_map);
    EXPECT_EQ(c.trace.rows[k].e_spinor, 0.0);
  }
  for (const Spinor& s : c.psi.values().data()) EXPECT_EQ(norm2(s), 0.0);
}

TEST(Solver, DeterministicTraces) {
  const Grid g = unit_torus();
  const MapField phi0 = perturbed(g, 0.2, 6);
  const SpinorAlongMap psi0 = project_tangent(phi0, random_smooth_spinor(g, 3, 7));
  SolverParams p;
  p.max_iters = 100;
  EXPECT_EQ(trace_csv(relax_coupled(phi0, psi0, p).trace), trace_csv(relax_coupled(phi0, psi0, p).trace));
}

TEST(Solver, InvariantsHoldAlongCoupledRun) {
  const Grid g = unit_torus();
  const MapField phi0 = perturbed(g, 0.3, 8);
  const SpinorAlongMap psi0 = project_tangent(phi0, random_smooth_spinor(g, 3, 9));
  SolverParams p;
  p.max_iters = 50;
  const CoupledSolve r = relax_coupled(phi0, psi0, p);  // constructors re-validate both invariants
  EXPECT_LT(SpinorAlongMap::tangency_defect(r.phi, r.psi.values()), 1e-12);
  EXPECT_LT(r.trace.rows.back().residual_spinor, r.trace.rows.front().residual_spinor);
}

TEST(Solver, ConstantMapWithConstantSpinorIsAFixedPoint) {
  const Grid g = unit_torus();
  const double pt[3] = {0, 0, 1};
  const MapField phi = MapField::constant(g, pt);
  const SpinorAlongMap psi = project_tangent(phi, SpinorField(g, 3, Spinor{{0.4, 0.1}, {0.0, -0.3}}));
  SolverParams p;
  p.psi_norm_target = quadrature(spinor_energy_density(psi.values()));
  p.tol = 1e-10;
  const CoupledSolve r = relax_coupled(phi, psi, p);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LT(r.trace.rows.back().residual_spinor, p.tol);
  EXPECT_LT(r.trace.rows.back().residual_map, p.tol);
  EXPECT_NEAR(r.trace.rows.back().e_spinor, p.psi_norm_target, 1e-12);
}

TEST(Solver, NormTargetHoldsQuarticEnergy) {
  const Grid g = unit_torus();
  const MapField phi0 = perturbed(g, 0.2, 10);
  const SpinorAlongMap psi0 = project_tangent(phi0, random_smooth_spinor(g, 3, 11));
  SolverParams p;
  p.max_iters = 30;
  p.tol = 0;
  p.psi_norm_target = 0.5;
  const CoupledSolve r = relax_coupled(phi0, psi0, p);
  EXPECT_NEAR(r.trace.rows.back().e_spinor, 0.5, 1e-10);
}

TEST(Solver, FixedPointStepChangesResidualLittle) {
  const Grid g = make_grid(Topology::Rectangle, 4, 4, 32, 32);
  SolverParams p;
  p.max_iters = 20000;
  p.tol = 1e-6;
  const HarmonicSolve settled = relax_harmonic(stereographic_bubble({}, g), p);
  ASSERT_TRUE(settled.trace.converged);
  SolverParams one = p;
  one.max_iters = 1;
  one.tol = 0;
  const HarmonicSolve next = relax_harmonic(settled.phi, one);
  EXPECT_LT(std::abs(next.trace.rows.back().residual_map - next.trace.rows.front().residual_map), 10 * p.tol);
}

TEST(Solver, DivergenceAborts) {
  const Grid g = unit_torus();
  SolverParams p;
  p.step = 50 * g.h() * g.h();
  p.max_iters = 500;
  p.tol = 0;
  EXPECT_THROW(relax_harmonic(perturbed(g, 0.05, 12), p), DivergenceError);
}

TEST(Solver, TraceCsvHeader) {
  const Grid g = unit_torus();
  SolverParams p;
  p.max_iters = 2;
  p.tol = 0;
  const std::string csv = trace_csv(relax_harmonic(perturbed(g, 0.1, 1), p).trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,e_map,e_spinor,residual_map,residual_spinor");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Solver, StabilityNumberRecorded) {
  const Grid g = unit_torus();
  EXPECT_DOUBLE_EQ(stability_number(default_step(g), g), 0.8);
  SolverParams p;
  p.step = 0.3 * g.h() * g.h();
  p.max_iters = 0;
  EXPECT_FALSE(relax_harmonic(perturbed(g, 0.1, 1), p).trace.warnings.empty());
}

TEST(VanishingProbe, ZeroBudgetIsTriviallyConstant) {
  SolverParams p;
  const ProbeReport r = vanishing_probe(0.0, 3, p);
  EXPECT_EQ(r.constant_count(), 3);
  EXPECT_THROW(vanishing_probe(-1.0, 1, p), InvalidArgument);
}

TEST(VanishingProbe, InitialDataHitsBudget) {
  SolverParams p;
  p.max_iters = 0;
  ProbeOptions o;
  o.grid = unit_torus(16);
  const ProbeReport r = vanishing_probe(0.05, 2, p, o);
  for (const auto& t : r.trials) {
    EXPECT_NEAR(t.initial_e_map, 0.025, 1e-9);
    EXPECT_NEAR(t.initial_e_spinor, 0.025, 1e-9);
  }
}

TEST(VanishingProbe, SmallBudgetOnCoarseTorus) {
  SolverParams p;
  p.max_iters = 3000;
  ProbeOptions o;
  o.grid = unit_torus(16);
  const ProbeReport r = vanishing_probe(0.05, 2, p, o);
  EXPECT_EQ(r.constant_count(), 2);
  EXPECT_EQ(probe_json(r)["summary"], "2/2 constant");
}
