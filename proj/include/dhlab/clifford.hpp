#pragma once

#include <array>
#include <complex>

namespace dhlab {

using Complex = std::complex<double>;

// One 2-component spinor in the flat trivialization of the spinor bundle.
struct Spinor {
  Complex c0{};
  Complex c1{};

  Spinor& operator+=(const Spinor& o) {
    c0 += o.c0;
    c1 += o.c1;
    return *this;
  }
  Spinor& operator-=(const Spinor& o) {
    c0 -= o.c0;
    c1 -= o.c1;
    return *this;
  }
  Spinor& operator*=(double s) {
    c0 *= s;
    c1 *= s;
    return *this;
  }
  friend Spinor operator+(Spinor a, const Spinor& b) { return a += b; }
  friend Spinor operator-(Spinor a, const Spinor& b) { return a -= b; }
  friend Spinor operator*(Spinor a, double s) { return a *= s; }
  friend Spinor operator*(double s, Spinor a) { return a *= s; }
  friend Spinor operator-(Spinor a) { return a *= -1.0; }
  friend bool operator==(const Spinor&, const Spinor&) = default;
};

using Mat2 = std::array<std::array<Complex, 2>, 2>;

// Matrices g1, g2 acting as Clifford multiplication by e_1, e_2.
struct CliffordBasis {
  std::array<Mat2, 2> g;

  // g1 = i*sigma_x, g2 = i*sigma_y.
  static const CliffordBasis& standard();
};

inline Spinor apply(const Mat2& m, const Spinor& xi) {
  return {m[0][0] * xi.c0 + m[0][1] * xi.c1, m[1][0] * xi.c0 + m[1][1] * xi.c1};
}

// e_alpha . xi for alpha in {1, 2}. Throws InvalidArgument otherwise.
Spinor clifford_mul(int alpha, const Spinor& xi,
                    const CliffordBasis& basis = CliffordBasis::standard());

// Hot-path variants of the standard basis, used by the stencil kernels.
inline Spinor e1_mul(const Spinor& xi) {
  constexpr Complex i{0.0, 1.0};
  return {i * xi.c1, i * xi.c0};
}
inline Spinor e2_mul(const Spinor& xi) { return {xi.c1, -xi.c0}; }

// Real part of the Hermitian pairing: symmetric, bilinear over R, positive definite.
inline double spinor_inner(const Spinor& xi, const Spinor& eta) {
  return xi.c0.real() * eta.c0.real() + xi.c0.imag() * eta.c0.imag() +
         xi.c1.real() * eta.c1.real() + xi.c1.imag() * eta.c1.imag();
}

inline double norm2(const Spinor& xi) { return spinor_inner(xi, xi); }

// v_1 (e_1 . xi) + v_2 (e_2 . xi).
Spinor vector_clifford(const std::array<double, 2>& v, const Spinor& xi,
                       const CliffordBasis& basis = CliffordBasis::standard());

bool is_finite(const Spinor& xi);

}  // namespace dhlab
