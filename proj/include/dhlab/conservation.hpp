#pragma once

#include "dhlab/sphere.hpp"

namespace dhlab {

// Per-site (n+1) x (n+1) matrices stored row-major: entry (m, i) is component m * dim + i.
struct CoefficientMatrices {
  VectorField a;
  VectorField b;
  int dim = 0;

  double a_at(std::size_t site, int m, int i) const { return a(site, m * dim + i); }
  double b_at(std::size_t site, int m, int i) const { return b(site, m * dim + i); }
};

// A^{mi} = <e_1 . psi^i, psi^m> - (phi^i_x phi^m - phi^i phi^m_x), B^{mi} likewise with y,
// so that Laplacian phi^m = A^{mi} phi^i_x + B^{mi} phi^i_y on solutions.
CoefficientMatrices coefficient_matrices(const MapField& phi, const SpinorAlongMap& psi);

// Largest |A^{mi} + A^{im}| or |B^{mi} + B^{im}| over sites and entries.
double antisymmetry_defect(const CoefficientMatrices& coeffs);

struct FieldNorm {
  VectorField field;
  double norm = 0.0;  // interior max of the per-site Euclidean norm
};

// Laplacian phi^m - A^{mi} phi^i_x - B^{mi} phi^i_y.
FieldNorm reconstruct_laplacian(const MapField& phi, const CoefficientMatrices& coeffs, int margin = kDefaultMargin);

// The same defect expressed through the Euler-Lagrange residual:
// r_phi^m - sum_a (phi . phi_a) phi^m_a. The second term vanishes in the continuum.
VectorField laplacian_defect_from_residuals(const MapField& phi, const SpinorAlongMap& psi);

// Discrete A_x + B_y per matrix entry; norm is the interior max over entries.
struct DivergenceResidual {
  VectorField field;
  double norm = 0.0;
};
DivergenceResidual divergence_residual(const CoefficientMatrices& coeffs, int margin = kDefaultMargin);

// Three evaluations of A^{mi}_x + B^{mi}_y that agree algebraically for any (phi, psi):
//   assembled: product-rule expansion of the coefficient definition,
//   dirac:     <dslash psi^i, psi^m> - <psi^i, dslash psi^m> - (Lap phi^i phi^m - Lap phi^m phi^i),
//   residual:  <r_psi^i, psi^m> - <psi^i, r_psi^m> - (r_phi^i phi^m - r_phi^m phi^i).
// The last one vanishes on solutions, which is the conservation law.
VectorField divergence_assembled(const MapField& phi, const SpinorAlongMap& psi);
VectorField divergence_dirac_form(const MapField& phi, const SpinorAlongMap& psi);
VectorField divergence_from_residuals(const MapField& phi, const SpinorAlongMap& psi);

// max |a - b| / max(max |a|, max |b|), or max |a - b| when both vanish.
double relative_difference(const VectorField& a, const VectorField& b, int margin = 0);
double max_abs(const VectorField& f, int margin = 0);

// Zero-mean potential M with M_y ~ A and M_x ~ -B.
struct PotentialField {
  VectorField m;
  int dim = 0;
};

// Solves Lap M^{mi} = A^{mi}_y - B^{mi}_x on the torus by FFT with the five-point
// symbol and zero-mean gauge. Throws UnsupportedTopology on a rectangle and
// PreconditionError if the right side has mean beyond mean_tol (1 + max |rhs|).
PotentialField frobenius_potential(const CoefficientMatrices& coeffs, double mean_tol = 1e-10);

// Lap phi + M_x phi_y - M_y phi_x.
FieldNorm wente_residual(const MapField& phi, const PotentialField& potential, int margin = kDefaultMargin);

// (M_x + B) phi_y - (M_y - A) phi_x, the gap between the Wente form and reconstruct_laplacian.
FieldNorm potential_defect(const MapField& phi, const CoefficientMatrices& coeffs, const PotentialField& potential,
                           int margin = kDefaultMargin);

// max |M_y - A| + max |M_x + B| over interior sites and entries.
double potential_gradient_defect(const CoefficientMatrices& coeffs, const PotentialField& potential,
                                 int margin = kDefaultMargin);

}  // namespace dhlab
