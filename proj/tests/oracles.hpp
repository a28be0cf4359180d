#pragma once

// Closed-form reference values, written independently of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

// Centered difference of sin(2 pi x) at x on spacing h.
inline double centered_diff_sin(double x, double h) { return std::cos(2 * pi * x) * std::sin(2 * pi * h) / h; }

// Five-point Laplacian eigenvalue of sin(2 pi kx x) sin(2 pi ky y) on spacing h.
inline double five_point_eigenvalue(int kx, int ky, double h) {
  return -(2.0 / (h * h)) * (1.0 - std::cos(2 * pi * kx * h)) - (2.0 / (h * h)) * (1.0 - std::cos(2 * pi * ky * h));
}

// Degree-one bubble of scale lambda: energy inside the centered disk of radius r.
inline double bubble_disk(double lambda, double r) { return 8 * pi * r * r / (lambda * lambda + r * r); }

// Neck energy between radii a < b.
inline double bubble_annulus(double lambda, double a, double b) {
  return bubble_disk(lambda, b) - bubble_disk(lambda, a);
}

// Quartic energy of the stereographic-derivative spinor inside radius rho (in bubble units).
inline double test_spinor_disk(double rho) { return 64 * pi / 3 * (1 - 1 / std::pow(1 + rho * rho, 3)); }

// Inverse stereographic projection written out componentwise.
inline std::array<double, 3> stereo(double u1, double u2) {
  const double r2 = u1 * u1 + u2 * u2;
  return {2 * u1 / (1 + r2), 2 * u2 / (1 + r2), (r2 - 1) / (1 + r2)};
}

// Energy density |d Phi|^2 of the unit bubble.
inline double bubble_density(double u1, double u2) {
  const double d = 1 + u1 * u1 + u2 * u2;
  return 8 / (d * d);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
