#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhlab/sphere.hpp"

namespace dhlab {

using Point = std::array<double, 2>;
using Rotation = std::array<std::array<double, 3>, 3>;

inline constexpr Rotation kIdentityRotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

// Degree-one bubble centered at `center` with scale lambda, rotated by `orientation`.
struct BubbleSpec {
  Point center{0.0, 0.0};
  double lambda = 1.0;
  Rotation orientation = kIdentityRotation;
};

// Inverse stereographic projection of u in the plane:
//   (2u / (1 + |u|^2), (|u|^2 - 1) / (1 + |u|^2)).
std::array<double, 3> inverse_stereographic(std::complex<double> u);

// Same point, computed from v = 1/u so that u = infinity is the north pole.
std::array<double, 3> inverse_stereographic_reciprocal(std::complex<double> v);

std::array<double, 3> bubble_value(const BubbleSpec& spec, double x, double y);

// R Phi((x - center) / lambda) sampled on a rectangle. n must be 2.
MapField stereographic_bubble(const BubbleSpec& spec, const Grid& grid, int n = 2);

// Closed-form energy of the degree-one bubble inside a centered disk: 8 pi r^2 / (lambda^2 + r^2).
double bubble_disk_energy(double lambda, double radius);

// Holomorphic superposition with 1/w = sum_k lambda_k / (z - c_k). Each pole of
// 1/w is a bubble of scale ~lambda_k; the result is an exact harmonic map of
// degree equal to the number of specs. Orientation of the first spec is applied.
MapField bubble_superposition(const std::vector<BubbleSpec>& specs, const Grid& grid);

// Doubly periodic bubble on a square torus of side L:
//   w(z) = scale * t(z - a) t(z + a) / (t(z - b) t(z + b)),   z = pi (x - shift) / L,
// with t the first Jacobi theta function at nome e^{-pi}. w is elliptic for the
// square lattice, so the map is an exact harmonic map of degree 2 and energy 16 pi.
struct EllipticBubbleSpec {
  std::complex<double> zero{0.25 * 3.141592653589793, 0.0};  // a
  std::complex<double> pole{0.0, 0.25 * 3.141592653589793};  // b
  double scale = 1.0;
  Point shift{0.0, 0.0};
};

std::complex<double> jacobi_theta1(std::complex<double> z);
MapField elliptic_bubble(const EllipticBubbleSpec& spec, const Grid& torus);

// Test spinor xi = d_{u1}Phi (1, 0) + d_{u2}Phi (0, 1) at u = (x - c)/lambda, scaled by
// lambda^{-1/2} and rotated with the map. Tangent to the bubble, not a solution.
// Its continuum quartic energy is 64 pi / 3.
SpinorField bubble_test_spinor(const BubbleSpec& spec, const Grid& grid);

// Closed-form quartic energy of the test spinor inside a centered disk.
double test_spinor_disk_energy(double lambda, double radius);

struct FamilyMember {
  double lambda = 0.0;
  MapField phi;
  SpinorAlongMap psi;
};

// Bubbles at a common center with strictly decreasing scales.
struct ConcentrationFamily {
  Point center{0.0, 0.0};
  bool with_spinor = false;  // psi members are test spinors, not solutions
  std::vector<FamilyMember> members;
};

// Throws InvalidArgument for an empty or non-decreasing list and for
// lambda_k <= 2h, naming k.
ConcentrationFamily concentration_family(const std::vector<double>& lambdas, const Grid& grid, bool with_spinor,
                                         Point center = {0.0, 0.0}, const Rotation& orientation = kIdentityRotation);

struct LocalEnergy {
  double map = 0.0;
  double spinor = 0.0;
};

// Quadrature of |dphi|^2 and |psi|^4 over sites with |x - center| <= radius.
// psi may be null. Throws InvalidArgument if the disk leaves the domain.
LocalEnergy local_energy(const MapField& phi, const SpinorField* psi, Point center, double radius);

// Same over inner < |x - center| <= outer, so disk and annulus partition exactly. inner == outer gives zero;
// inner > outer throws InvalidArgument.
LocalEnergy annulus_energy(const MapField& phi, const SpinorField* psi, Point center, double inner, double outer);

struct IdentityRow {
  double lambda = 0, delta = 0, r = 0;
  double e_disk = 0, e_annulus = 0, e_spinor_disk = 0, e_spinor_annulus = 0, e_total = 0;
  bool annulus_empty = false;  // lambda R >= delta
};

struct IdentityTable {
  std::vector<IdentityRow> rows;
};

// Per member: disk energy on D_delta, annulus energy on A(delta, R, k) (zero when
// lambda R >= delta), and total energy of the pair.
IdentityTable energy_identity_experiment(const ConcentrationFamily& family, double delta, double r);

std::string identity_csv(const IdentityTable& table);

struct BlowupCluster {
  Point centroid{0.0, 0.0};
  std::size_t sites = 0;
  double peak_energy = 0.0;
};

// Clusters of sites where the last member's local energy on D(x, r) is >= eps0.
std::vector<BlowupCluster> detect_blowup_set(const ConcentrationFamily& family, double eps0, double r);
std::vector<BlowupCluster> detect_blowup_set(const MapField& phi, const SpinorField* psi, double eps0, double r);

nlohmann::json blowup_json(const std::vector<BlowupCluster>& clusters, double eps0, double r);

struct RegularityReport {
  double r1 = 0.0;  // sup |dphi| over the shrunk domain / ||dphi||_{L2}
  double r2 = 0.0;  // sup |psi| over the shrunk domain / ||psi||_{L4}
  bool trivial_map = false;
  bool trivial_spinor = false;
  double energy = 0.0;  // e_map + e_spinor over the domain
  double eps0 = 1.0;
  bool hypothesis = false;  // energy < eps0
  int margin = 0;
};

inline constexpr double kDefaultEps0 = 1.0;

RegularityReport epsilon_regularity_probe(const MapField& phi, const SpinorField* psi, int margin,
                                          double eps0 = kDefaultEps0);

nlohmann::json regularity_json(const RegularityReport& report);

}  // namespace dhlab
