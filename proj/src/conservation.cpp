#include "dhlab/conservation.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dhlab/errors.hpp"

namespace dhlab {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* op) {
  if (!(a == b)) throw PreconditionError(std::string(op) + ": fields live on different grids");
}

// <e_a . psi^i, psi^m> for both directions, row-major (m, i).
struct CliffordPairings {
  std::vector<double> x, y;
};

void clifford_pairings(const SpinorField& psi, std::size_t s, int K, CliffordPairings& out) {
  out.x.assign(static_cast<std::size_t>(K * K), 0.0);
  out.y.assign(static_cast<std::size_t>(K * K), 0.0);
  for (int i = 0; i < K; ++i) {
    const Spinor ex = e1_mul(psi(s, i));
    const Spinor ey = e2_mul(psi(s, i));
    for (int m = 0; m < K; ++m) {
      out.x[static_cast<std::size_t>(m * K + i)] = spinor_inner(ex, psi(s, m));
      out.y[static_cast<std::size_t>(m * K + i)] = spinor_inner(ey, psi(s, m));
    }
  }
}

// Per entry (m, i): <u^i, v^m> - <v^i, u^m> - (p^i q^m - p^m q^i).
VectorField antisymmetric_combination(const SpinorField& u, const SpinorField& v, const VectorField& p,
                                      const VectorField& q) {
  const int K = u.comps();
  VectorField out(u.grid(), K * K);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      for (int i = 0; i < K; ++i) {
        out(s, m * K + i) = spinor_inner(u(s, i), v(s, m)) - spinor_inner(v(s, i), u(s, m)) -
                            (p(s, i) * q(s, m) - p(s, m) * q(s, i));
      }
    }
  }
  return out;
}

// RAII wrapper over one forward/backward real 2-D FFT pair.
class PeriodicPoisson {
 public:
  PeriodicPoisson(int nx, int ny, double h) : nx_(nx), ny_(ny) {
    const std::size_t nk = static_cast<std::size_t>(ny) * static_cast<std::size_t>(nx / 2 + 1);
    real_ = fftw_alloc_real(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    spec_ = fftw_alloc_complex(nk);
    forward_ = fftw_plan_dft_r2c_2d(ny, nx, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(ny, nx, spec_, real_, FFTW_ESTIMATE);
    symbol_.resize(nk);
    for (int ky = 0; ky < ny; ++ky) {
      const double sy = std::sin(std::numbers::pi * ky / ny);
      for (int kx = 0; kx <= nx / 2; ++kx) {
        const double sx = std::sin(std::numbers::pi * kx / nx);
        symbol_[static_cast<std::size_t>(ky) * static_cast<std::size_t>(nx / 2 + 1) + static_cast<std::size_t>(kx)] =
            -4.0 / (h * h) * (sx * sx + sy * sy);
      }
    }
  }
  ~PeriodicPoisson() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  PeriodicPoisson(const PeriodicPoisson&) = delete;
  PeriodicPoisson& operator=(const PeriodicPoisson&) = delete;

  double* buffer() { return real_; }

  // Replaces buffer() with the zero-mean solution of the five-point Poisson problem.
  void solve() {
    fftw_execute(forward_);
    const double scale = 1.0 / (static_cast<double>(nx_) * static_cast<double>(ny_));
    for (std::size_t k = 0; k < symbol_.size(); ++k) {
      if (k == 0) {
        spec_[k][0] = spec_[k][1] = 0.0;
        continue;
      }
      const double f = scale / symbol_[k];
      spec_[k][0] *= f;
      spec_[k][1] *= f;
    }
    fftw_execute(backward_);
  }

 private:
  int nx_, ny_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_{}, backward_{};
  std::vector<double> symbol_;
};

}  // namespace

CoefficientMatrices coefficient_matrices(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "coefficient_matrices");
  const int K = phi.ambient_dim();
  const VectorField dx = diff(phi.values(), Axis::X);
  const VectorField dy = diff(phi.values(), Axis::Y);
  CoefficientMatrices c{VectorField(phi.grid(), K * K), VectorField(phi.grid(), K * K), K};
  CliffordPairings pair;
  for (std::size_t s = 0; s < phi.values().sites(); ++s) {
    clifford_pairings(psi.values(), s, K, pair);
    const auto p = phi.at(s);
    for (int m = 0; m < K; ++m) {
      for (int i = 0; i < K; ++i) {
        const std::size_t e = static_cast<std::size_t>(m * K + i);
        c.a(s, m * K + i) = pair.x[e] - (dx(s, i) * p[m] - p[i] * dx(s, m));
        c.b(s, m * K + i) = pair.y[e] - (dy(s, i) * p[m] - p[i] * dy(s, m));
      }
    }
  }
  return c;
}

double antisymmetry_defect(const CoefficientMatrices& coeffs) {
  const int K = coeffs.dim;
  double worst = 0.0;
  for (std::size_t s = 0; s < coeffs.a.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      for (int i = m; i < K; ++i) {
        worst = std::max(worst, std::abs(coeffs.a_at(s, m, i) + coeffs.a_at(s, i, m)));
        worst = std::max(worst, std::abs(coeffs.b_at(s, m, i) + coeffs.b_at(s, i, m)));
      }
    }
  }
  return worst;
}

FieldNorm reconstruct_laplacian(const MapField& phi, const CoefficientMatrices& coeffs, int margin) {
  require_same_grid(phi.grid(), coeffs.a.grid(), "reconstruct_laplacian");
  const int K = coeffs.dim;
  const VectorField dx = diff(phi.values(), Axis::X);
  const VectorField dy = diff(phi.values(), Axis::Y);
  VectorField out = laplacian(phi.values());
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      double v = 0.0;
      for (int i = 0; i < K; ++i) v += coeffs.a_at(s, m, i) * dx(s, i) + coeffs.b_at(s, m, i) * dy(s, i);
      out(s, m) -= v;
    }
  }
  const double n = interior_max_norm(out, margin);
  return {std::move(out), n};
}

VectorField laplacian_defect_from_residuals(const MapField& phi, const SpinorAlongMap& psi) {
  const Residuals r = el_residuals(phi, psi);
  const VectorField dx = diff(phi.values(), Axis::X);
  const VectorField dy = diff(phi.values(), Axis::Y);
  const int K = phi.ambient_dim();
  VectorField out = r.map;
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const auto p = phi.at(s);
    double px = 0.0, py = 0.0;
    for (int i = 0; i < K; ++i) {
      px += p[i] * dx(s, i);
      py += p[i] * dy(s, i);
    }
    for (int m = 0; m < K; ++m) out(s, m) -= px * dx(s, m) + py * dy(s, m);
  }
  return out;
}

DivergenceResidual divergence_residual(const CoefficientMatrices& coeffs, int margin) {
  VectorField div = diff(coeffs.a, Axis::X);
  div += diff(coeffs.b, Axis::Y);
  const double n = max_abs(div, margin);
  return {std::move(div), n};
}

VectorField divergence_assembled(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "divergence_assembled");
  const int K = phi.ambient_dim();
  const SpinorField& ps = psi.values();
  const VectorField& p = phi.values();
  const SpinorField psi_d[2] = {diff(ps, Axis::X), diff(ps, Axis::Y)};
  const VectorField phi_d[2] = {diff(p, Axis::X), diff(p, Axis::Y)};
  const VectorField phi_dd[2] = {second_diff(p, Axis::X), second_diff(p, Axis::Y)};
  VectorField out(phi.grid(), K * K);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      for (int i = 0; i < K; ++i) {
        double v = 0.0;
        for (int a = 0; a < 2; ++a) {
          const auto mul = a == 0 ? e1_mul : e2_mul;
          // d_a <e_a . psi^i, psi^m>
          v += spinor_inner(mul(psi_d[a](s, i)), ps(s, m)) + spinor_inner(mul(ps(s, i)), psi_d[a](s, m));
          // d_a (phi^i_a phi^m - phi^i phi^m_a)
          v -= phi_dd[a](s, i) * p(s, m) + phi_d[a](s, i) * phi_d[a](s, m) - phi_d[a](s, i) * phi_d[a](s, m) -
               p(s, i) * phi_dd[a](s, m);
        }
        out(s, m * K + i) = v;
      }
    }
  }
  return out;
}

VectorField divergence_dirac_form(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "divergence_dirac_form");
  const SpinorField d = dirac_flat(psi.values());
  return antisymmetric_combination(d, psi.values(), laplacian(phi.values()), phi.values());
}

VectorField divergence_from_residuals(const MapField& phi, const SpinorAlongMap& psi) {
  const Residuals r = el_residuals(phi, psi);
  return antisymmetric_combination(r.spinor, psi.values(), r.map, phi.values());
}

double max_abs(const VectorField& f, int margin) {
  const Grid& g = f.grid();
  double worst = 0.0;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      if (!g.interior(i, j, margin)) continue;
      for (int c = 0; c < f.comps(); ++c) worst = std::max(worst, std::abs(f.at(i, j, c)));
    }
  }
  return worst;
}

double relative_difference(const VectorField& a, const VectorField& b, int margin) {
  if (!a.same_shape(b)) throw PreconditionError("relative_difference: field shapes differ");
  VectorField d = a;
  d -= b;
  const double num = max_abs(d, margin);
  const double den = std::max(max_abs(a, margin), max_abs(b, margin));
  return den > 0.0 ? num / den : num;
}

PotentialField frobenius_potential(const CoefficientMatrices& coeffs, double mean_tol) {
  const Grid& g = coeffs.a.grid();
  if (!g.periodic()) {
    throw UnsupportedTopology("frobenius_potential: the periodic Poisson solve needs a torus grid, got " +
                              to_string(g.topology()));
  }
  const int K = coeffs.dim;
  VectorField rhs = diff(coeffs.a, Axis::Y);
  rhs -= diff(coeffs.b, Axis::X);

  PeriodicPoisson poisson(g.nx(), g.ny(), g.h());
  PotentialField out{VectorField(g, K * K), K};
  const std::size_t n = g.size();
  for (int e = 0; e < K * K; ++e) {
    double mean = 0.0, peak = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      mean += rhs(s, e);
      peak = std::max(peak, std::abs(rhs(s, e)));
    }
    mean /= static_cast<double>(n);
    if (std::abs(mean) > mean_tol * (1.0 + peak)) {
      std::ostringstream os;
      os << "frobenius_potential: right side of entry (" << e / K << ", " << e % K << ") has mean " << mean;
      throw PreconditionError(os.str());
    }
    double* buf = poisson.buffer();
    for (std::size_t s = 0; s < n; ++s) buf[s] = rhs(s, e);
    poisson.solve();
    for (std::size_t s = 0; s < n; ++s) out.m(s, e) = buf[s];
  }
  return out;
}

FieldNorm wente_residual(const MapField& phi, const PotentialField& potential, int margin) {
  require_same_grid(phi.grid(), potential.m.grid(), "wente_residual");
  const int K = potential.dim;
  const VectorField dx = diff(phi.values(), Axis::X);
  const VectorField dy = diff(phi.values(), Axis::Y);
  const VectorField mx = diff(potential.m, Axis::X);
  const VectorField my = diff(potential.m, Axis::Y);
  VectorField out = laplacian(phi.values());
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      double v = 0.0;
      for (int i = 0; i < K; ++i) v += mx(s, m * K + i) * dy(s, i) - my(s, m * K + i) * dx(s, i);
      out(s, m) += v;
    }
  }
  const double n = interior_max_norm(out, margin);
  return {std::move(out), n};
}

FieldNorm potential_defect(const MapField& phi, const CoefficientMatrices& coeffs, const PotentialField& potential,
                           int margin) {
  require_same_grid(phi.grid(), potential.m.grid(), "potential_defect");
  const int K = potential.dim;
  const VectorField dx = diff(phi.values(), Axis::X);
  const VectorField dy = diff(phi.values(), Axis::Y);
  const VectorField mx = diff(potential.m, Axis::X);
  const VectorField my = diff(potential.m, Axis::Y);
  VectorField out(phi.grid(), K);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int m = 0; m < K; ++m) {
      double v = 0.0;
      for (int i = 0; i < K; ++i) {
        const int e = m * K + i;
        v += (mx(s, e) + coeffs.b(s, e)) * dy(s, i) - (my(s, e) - coeffs.a(s, e)) * dx(s, i);
      }
      out(s, m) = v;
    }
  }
  const double n = interior_max_norm(out, margin);
  return {std::move(out), n};
}

double potential_gradient_defect(const CoefficientMatrices& coeffs, const PotentialField& potential, int margin) {
  VectorField dy_gap = diff(potential.m, Axis::Y);
  dy_gap -= coeffs.a;
  VectorField dx_gap = diff(potential.m, Axis::X);
  dx_gap += coeffs.b;
  return max_abs(dy_gap, margin) + max_abs(dx_gap, margin);
}

}  // namespace dhlab
