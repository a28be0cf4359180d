#include "dhlab/clifford.hpp"

#include <cmath>
#include <string>

#include "dhlab/errors.hpp"

namespace dhlab {

const CliffordBasis& CliffordBasis::standard() {
  static const CliffordBasis basis = [] {
    constexpr Complex i{0.0, 1.0};
    CliffordBasis b;
    b.g[0] = Mat2{{{0.0, i}, {i, 0.0}}};
    b.g[1] = Mat2{{{0.0, 1.0}, {-1.0, 0.0}}};
    return b;
  }();
  return basis;
}

Spinor clifford_mul(int alpha, const Spinor& xi, const CliffordBasis& basis) {
  if (alpha != 1 && alpha != 2) {
    throw InvalidArgument("clifford_mul: direction must be 1 or 2, got " + std::to_string(alpha));
  }
  return apply(basis.g[alpha - 1], xi);
}

Spinor vector_clifford(const std::array<double, 2>& v, const Spinor& xi,
                       const CliffordBasis& basis) {
  return v[0] * apply(basis.g[0], xi) + v[1] * apply(basis.g[1], xi);
}

bool is_finite(const Spinor& xi) {
  return std::isfinite(xi.c0.real()) && std::isfinite(xi.c0.imag()) &&
         std::isfinite(xi.c1.real()) && std::isfinite(xi.c1.imag());
}

}  // namespace dhlab
