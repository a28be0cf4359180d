#pragma once

#include <array>
#include <span>
#include <vector>

#include "dhlab/grid.hpp"

namespace dhlab {

// Residual norms skip this many boundary rings on a rectangle.
inline constexpr int kDefaultMargin = 2;

// Grid-sampled map into the unit sphere S^n in R^{n+1}.
class MapField {
 public:
  static constexpr double kUnitTolerance = 1e-12;

  MapField() = default;
  // Throws PreconditionError if some site is off the sphere or n < 2.
  explicit MapField(VectorField values);

  const VectorField& values() const { return values_; }
  const Grid& grid() const { return values_.grid(); }
  int ambient_dim() const { return values_.comps(); }
  int target_dim() const { return values_.comps() - 1; }
  std::span<const double> at(std::size_t site) const { return values_.site(site); }

  static MapField constant(const Grid& grid, std::span<const double> point);

 private:
  VectorField values_;
};

// (n+1) spinors per site with sum_i phi^i psi^i = 0.
class SpinorAlongMap {
 public:
  static constexpr double kTangencyTolerance = 1e-10;

  SpinorAlongMap() = default;
  // Throws PreconditionError if the tangency constraint fails at some site.
  SpinorAlongMap(const MapField& phi, SpinorField values);

  static SpinorAlongMap zero(const MapField& phi);

  const SpinorField& values() const { return values_; }
  const Grid& grid() const { return values_.grid(); }

  // Largest |sum_i phi^i psi^i| over sites.
  static double tangency_defect(const MapField& phi, const SpinorField& psi);

 private:
  SpinorField values_;
};

// v / |v| per site; throws PreconditionError naming the first zero site.
MapField project_sphere(const VectorField& raw);

// psi^i - phi^i sum_j phi^j psi^j per site.
SpinorAlongMap project_tangent(const MapField& phi, const SpinorField& raw);
SpinorField project_tangent_raw(const MapField& phi, const SpinorField& raw);

using AmbientVector = std::vector<double>;

// Second fundamental form of the unit sphere at p: A(X, Y) = -<X, Y> p.
AmbientVector second_fundamental(std::span<const double> x, std::span<const double> y, std::span<const double> p);

// Shape operator, defined by <P(xi; X), Y> = <A(X, Y), xi>; for xi = f p this is -f X.
AmbientVector shape_operator(std::span<const double> xi, std::span<const double> x, std::span<const double> p);

// Curvature operator of the round sphere: R(X, Y) Z = <Y, Z> X - <X, Z> Y.
AmbientVector sphere_curvature(std::span<const double> x, std::span<const double> y, std::span<const double> z);

// 1/2 R^m_{lij} <psi^i, grad phi^l . psi^j>, contracted through the curvature tensor.
VectorField curvature_term(const MapField& phi, const SpinorAlongMap& psi);

// P(A(dphi(e_a), e_a . psi); psi), contracted through the second fundamental
// form and shape operator.
VectorField curvature_term_extrinsic(const MapField& phi, const SpinorAlongMap& psi);

// Extrinsic Dirac operator along the map: dslash psi^m + sum_i (grad phi^i . psi^i) phi^m.
SpinorField dirac_along_map(const MapField& phi, const SpinorAlongMap& psi);
// Same operator applied to an arbitrary spinor array over phi's grid.
SpinorField dirac_along_map(const MapField& phi, const SpinorField& psi);

// Spinor source of the map equation, S^m = -sum_i phi^i_a <e_a . psi^i, psi^m>.
VectorField spinor_source(const MapField& phi, const SpinorField& psi);

// Laplacian + |dphi|^2 phi, i.e. the tension of phi with no spinor coupling.
VectorField harmonic_tension(const MapField& phi);

struct Residuals {
  VectorField map;      // Laplacian phi + |dphi|^2 phi + S(phi, psi)
  SpinorField spinor;   // dirac_along_map(phi, psi)
};

Residuals el_residuals(const MapField& phi, const SpinorAlongMap& psi);

// Pointwise |dphi|^2 and (sum_i |psi^i|^2)^2.
ScalarField map_energy_density(const MapField& phi);
ScalarField spinor_energy_density(const SpinorField& psi);

struct EnergyReport {
  double e_map = 0.0;
  double e_spinor = 0.0;
  double l_value = 0.0;
  double residual_map = 0.0;
  double residual_spinor = 0.0;
  int margin = kDefaultMargin;
  bool degenerate_spinor = false;  // e_spinor above kDegenerateSpinorEnergy
  Grid grid;
};

inline constexpr double kDegenerateSpinorEnergy = 1e6;

EnergyReport energies(const MapField& phi, const SpinorAlongMap& psi, int margin = kDefaultMargin);

// Max interior residuals <= tol (1 + e_map).
bool converged(const EnergyReport& report, double tol);

}  // namespace dhlab
