#include <gtest/gtest.h>

#include "dhlab/bubble.hpp"
#include "dhlab/conservation.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/random_fields.hpp"

using namespace dhlab;

namespace {

struct Pair {
  MapField phi;
  SpinorAlongMap psi;
};

Pair random_pair(const Grid& g, std::uint64_t seed) {
  FourierSpec spec;
  spec.include_mean = true;
  MapField phi = random_smooth_map(g, 2, seed, 1.0, spec);
  return {phi, project_tangent(phi, random_smooth_spinor(g, 3, seed + 50))};
}

Grid torus(int nx) { return make_grid(Topology::Torus, 1, 1, nx, nx, 0, 0); }

}  // namespace

TEST(Conservation, CoefficientsAreAntisymmetric) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = random_pair(torus(16), seed);
    const auto c = coefficient_matrices(p.phi, p.psi);
    EXPECT_LT(antisymmetry_defect(c), 1e-13);
  }
}

TEST(Conservation, DivergenceFormsAgreeAlgebraically) {
  for (std::uint64_t seed : {4u, 5u}) {
    for (auto topo : {Topology::Torus, Topology::Rectangle}) {
      const Grid g = make_grid(topo, 1, 1, 32, 32);
      const auto p = random_pair(g, seed);
      const VectorField d = divergence_dirac_form(p.phi, p.psi);
      EXPECT_LT(relative_difference(divergence_assembled(p.phi, p.psi), d), 1e-12);
      EXPECT_LT(relative_difference(divergence_from_residuals(p.phi, p.psi), d), 1e-12);
    }
  }
}

TEST(Conservation, DifferencedDivergenceIsConsistentAtSecondOrder) {
  // D_x A + D_y B differs from the assembled product-rule form by O(h^2).
  double prev = 0;
  for (int nx : {64, 128, 256}) {
    const auto p = random_pair(torus(nx), 6);
    const auto c = coefficient_matrices(p.phi, p.psi);
    const double gap = relative_difference(divergence_residual(c).field, divergence_assembled(p.phi, p.psi));
    if (prev > 0) EXPECT_GT(prev / gap, 3.5);
    prev = gap;
  }
}

TEST(Conservation, LaplacianDefectMatchesResidualForm) {
  const auto p = random_pair(torus(32), 7);
  const auto c = coefficient_matrices(p.phi, p.psi);
  const FieldNorm a = reconstruct_laplacian(p.phi, c, 0);
  const VectorField b = laplacian_defect_from_residuals(p.phi, p.psi);
  EXPECT_LT(relative_difference(a.field, b), 1e-12);
}

TEST(Conservation, BubbleResidualsConvergeAtSecondOrder) {
  double pd = 0, pl = 0;
  for (int nx : {64, 128, 256}) {
    const Grid g = make_grid(Topology::Rectangle, 8, 8, nx, nx);
    const MapField phi = stereographic_bubble({}, g);
    const auto c = coefficient_matrices(phi, SpinorAlongMap::zero(phi));
    const double d = divergence_residual(c).norm;
    const double l = reconstruct_laplacian(phi, c).norm;
    if (pd > 0) {
      EXPECT_GT(pd / d, 3.5);
      EXPECT_GT(pl / l, 3.5);
    }
    pd = d;
    pl = l;
  }
}

TEST(Conservation, ConstantMapHasZeroResiduals) {
  const Grid g = torus(16);
  const double pt[3] = {0, 1, 0};
  const MapField phi = MapField::constant(g, pt);
  const auto c = coefficient_matrices(phi, SpinorAlongMap::zero(phi));
  EXPECT_EQ(divergence_residual(c).norm, 0.0);
  EXPECT_EQ(reconstruct_laplacian(phi, c).norm, 0.0);
  const PotentialField m = frobenius_potential(c);
  EXPECT_EQ(wente_residual(phi, m).norm, 0.0);
}

TEST(Conservation, PotentialNeedsTorus) {
  const Grid g = make_grid(Topology::Rectangle, 8, 8, 16, 16);
  const MapField phi = stereographic_bubble({}, g);
  const auto c = coefficient_matrices(phi, SpinorAlongMap::zero(phi));
  EXPECT_THROW(frobenius_potential(c), UnsupportedTopology);
}

TEST(Conservation, PotentialSolvesPoissonExactly) {
  // The discrete Laplacian of M reproduces D_y A - D_x B to rounding, with zero mean.
  const auto p = random_pair(torus(32), 9);
  const auto c = coefficient_matrices(p.phi, p.psi);
  const PotentialField m = frobenius_potential(c);
  VectorField rhs = diff(c.a, Axis::Y);
  rhs -= diff(c.b, Axis::X);
  EXPECT_LT(relative_difference(laplacian(m.m), rhs), 1e-10);
  for (int e = 0; e < m.m.comps(); ++e) {
    double mean = 0;
    for (std::size_t s = 0; s < m.m.sites(); ++s) mean += m.m(s, e);
    EXPECT_NEAR(mean / static_cast<double>(m.m.sites()), 0.0, 1e-12);
  }
}

TEST(Conservation, WenteFormConvergesOnEllipticBubble) {
  double pw = 0, pg = 0;
  for (int nx : {64, 128, 256}) {
    const MapField phi = elliptic_bubble({}, torus(nx));
    const auto c = coefficient_matrices(phi, SpinorAlongMap::zero(phi));
    const PotentialField m = frobenius_potential(c);
    const double w = wente_residual(phi, m).norm;
    const double gap = potential_gradient_defect(c, m);
    if (pw > 0) {
      EXPECT_GT(pw / w, 3.5);
      EXPECT_GT(pg / gap, 3.5);
    }
    pw = w;
    pg = gap;
  }
}
