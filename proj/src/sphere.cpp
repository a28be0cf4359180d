#include "dhlab/sphere.hpp"

#include <cmath>
#include <sstream>

#include "dhlab/errors.hpp"

namespace dhlab {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_same_grid(const Grid& a, const Grid& b, const char* op) {
  if (!(a == b)) throw PreconditionError(std::string(op) + ": fields live on different grids");
}

std::string site_name(const Grid& g, std::size_t s) {
  std::ostringstream os;
  os << "site " << s << " (i = " << s % static_cast<std::size_t>(g.sites_x())
     << ", j = " << s / static_cast<std::size_t>(g.sites_x()) << ")";
  return os.str();
}

// Tangent projection of the ambient basis vector e_i at p.
AmbientVector tangent_basis(std::size_t i, std::span<const double> p) {
  AmbientVector t(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) t[k] = (k == i ? 1.0 : 0.0) - p[i] * p[k];
  return t;
}

}  // namespace

MapField::MapField(VectorField values) : values_(std::move(values)) {
  if (values_.comps() < 3) throw PreconditionError("MapField: target sphere dimension must be >= 2");
  for (std::size_t s = 0; s < values_.sites(); ++s) {
    const double n = norm(values_.site(s));
    if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
      std::ostringstream os;
      os << "MapField: |phi| = " << n << " off the unit sphere at " << site_name(values_.grid(), s);
      throw PreconditionError(os.str());
    }
  }
}

MapField MapField::constant(const Grid& grid, std::span<const double> point) {
  VectorField v(grid, static_cast<int>(point.size()));
  const double n = norm(point);
  if (!(n > 0.0)) throw InvalidArgument("MapField::constant: zero point");
  for (std::size_t s = 0; s < v.sites(); ++s) {
    for (std::size_t c = 0; c < point.size(); ++c) v(s, static_cast<int>(c)) = point[c] / n;
  }
  return MapField(std::move(v));
}

double SpinorAlongMap::tangency_defect(const MapField& phi, const SpinorField& psi) {
  double worst = 0.0;
  for (std::size_t s = 0; s < psi.sites(); ++s) {
    Spinor acc;
    for (int i = 0; i < psi.comps(); ++i) acc += phi.values()(s, i) * psi(s, i);
    worst = std::max(worst, std::sqrt(norm2(acc)));
  }
  return worst;
}

SpinorAlongMap::SpinorAlongMap(const MapField& phi, SpinorField values) : values_(std::move(values)) {
  require_same_grid(phi.grid(), values_.grid(), "SpinorAlongMap");
  if (values_.comps() != phi.ambient_dim()) {
    throw PreconditionError("SpinorAlongMap: need one spinor per ambient coordinate");
  }
  const double defect = tangency_defect(phi, values_);
  if (!(defect <= kTangencyTolerance)) {
    std::ostringstream os;
    os << "SpinorAlongMap: tangency defect " << defect << " exceeds " << kTangencyTolerance;
    throw PreconditionError(os.str());
  }
}

SpinorAlongMap SpinorAlongMap::zero(const MapField& phi) {
  return SpinorAlongMap(phi, SpinorField(phi.grid(), phi.ambient_dim()));
}

MapField project_sphere(const VectorField& raw) {
  VectorField out = raw;
  for (std::size_t s = 0; s < out.sites(); ++s) {
    auto v = out.site(s);
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw PreconditionError("project_sphere: zero or non-finite vector at " + site_name(raw.grid(), s));
    }
    for (double& x : v) x /= n;
  }
  return MapField(std::move(out));
}

SpinorField project_tangent_raw(const MapField& phi, const SpinorField& raw) {
  require_same_grid(phi.grid(), raw.grid(), "project_tangent");
  if (raw.comps() != phi.ambient_dim()) throw PreconditionError("project_tangent: component count mismatch");
  SpinorField out = raw;
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const auto p = phi.at(s);
    Spinor normal;
    for (int j = 0; j < out.comps(); ++j) normal += p[j] * out(s, j);
    for (int i = 0; i < out.comps(); ++i) out(s, i) -= p[i] * normal;
  }
  return out;
}

SpinorAlongMap project_tangent(const MapField& phi, const SpinorField& raw) {
  return SpinorAlongMap(phi, project_tangent_raw(phi, raw));
}

AmbientVector second_fundamental(std::span<const double> x, std::span<const double> y, std::span<const double> p) {
  if (x.size() != p.size() || y.size() != p.size()) throw InvalidArgument("second_fundamental: dimension mismatch");
  const double tol = 1e-8;
  if (std::abs(dot(x, p)) > tol * std::max(1.0, norm(x)) || std::abs(dot(y, p)) > tol * std::max(1.0, norm(y))) {
    throw PreconditionError("second_fundamental: arguments must be tangent to the sphere at p");
  }
  const double xy = dot(x, y);
  AmbientVector out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = -xy * p[k];
  return out;
}

AmbientVector shape_operator(std::span<const double> xi, std::span<const double> x, std::span<const double> p) {
  if (xi.size() != p.size() || x.size() != p.size()) throw InvalidArgument("shape_operator: dimension mismatch");
  const double tol = 1e-8;
  if (std::abs(dot(x, p)) > tol * std::max(1.0, norm(x))) {
    throw PreconditionError("shape_operator: X must be tangent to the sphere at p");
  }
  const double f = dot(xi, p);
  double tangential = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) tangential += (xi[k] - f * p[k]) * (xi[k] - f * p[k]);
  if (std::sqrt(tangential) > tol * std::max(1.0, norm(xi))) {
    throw PreconditionError("shape_operator: xi must be normal to the sphere at p");
  }
  AmbientVector out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = -f * x[k];
  return out;
}

AmbientVector sphere_curvature(std::span<const double> x, std::span<const double> y, std::span<const double> z) {
  const double yz = dot(y, z);
  const double xz = dot(x, z);
  AmbientVector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = yz * x[k] - xz * y[k];
  return out;
}

namespace {

struct MapGradient {
  VectorField dx, dy;
};

MapGradient gradient(const MapField& phi) {
  return {diff(phi.values(), Axis::X), diff(phi.values(), Axis::Y)};
}

}  // namespace

VectorField curvature_term(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "curvature_term");
  const auto [dx, dy] = gradient(phi);
  const int K = phi.ambient_dim();
  const SpinorField& ps = psi.values();
  VectorField out(phi.grid(), K);
  std::vector<AmbientVector> basis(static_cast<std::size_t>(K));
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const auto p = phi.at(s);
    for (int i = 0; i < K; ++i) basis[static_cast<std::size_t>(i)] = tangent_basis(static_cast<std::size_t>(i), p);
    auto r = out.site(s);
    for (int l = 0; l < K; ++l) {
      const std::array<double, 2> grad{dx(s, l), dy(s, l)};
      for (int j = 0; j < K; ++j) {
        const Spinor grad_psi = vector_clifford(grad, ps(s, j));
        for (int i = 0; i < K; ++i) {
          const double coef = 0.5 * spinor_inner(ps(s, i), grad_psi);
          if (coef == 0.0) continue;
          const AmbientVector rv = sphere_curvature(basis[static_cast<std::size_t>(i)],
                                                    basis[static_cast<std::size_t>(j)],
                                                    basis[static_cast<std::size_t>(l)]);
          for (int m = 0; m < K; ++m) r[m] += coef * rv[static_cast<std::size_t>(m)];
        }
      }
    }
  }
  return out;
}

VectorField curvature_term_extrinsic(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "curvature_term_extrinsic");
  const auto [dx, dy] = gradient(phi);
  const int K = phi.ambient_dim();
  const SpinorField& ps = psi.values();
  VectorField out(phi.grid(), K);
  std::vector<AmbientVector> basis(static_cast<std::size_t>(K));
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const auto p = phi.at(s);
    for (int i = 0; i < K; ++i) basis[static_cast<std::size_t>(i)] = tangent_basis(static_cast<std::size_t>(i), p);
    auto r = out.site(s);
    for (int l = 0; l < K; ++l) {
      const double dl[2] = {dx(s, l), dy(s, l)};
      if (dl[0] == 0.0 && dl[1] == 0.0) continue;
      for (int j = 0; j < K; ++j) {
        const AmbientVector a = second_fundamental(basis[static_cast<std::size_t>(l)],
                                                   basis[static_cast<std::size_t>(j)], p);
        for (int i = 0; i < K; ++i) {
          double coef = 0.0;
          for (int alpha = 1; alpha <= 2; ++alpha) {
            coef += dl[alpha - 1] * spinor_inner(ps(s, i), clifford_mul(alpha, ps(s, j)));
          }
          if (coef == 0.0) continue;
          const AmbientVector pv = shape_operator(a, basis[static_cast<std::size_t>(i)], p);
          for (int m = 0; m < K; ++m) r[m] += coef * pv[static_cast<std::size_t>(m)];
        }
      }
    }
  }
  return out;
}

SpinorField dirac_along_map(const MapField& phi, const SpinorField& psi) {
  require_same_grid(phi.grid(), psi.grid(), "dirac_along_map");
  const auto [dx, dy] = gradient(phi);
  SpinorField out = dirac_flat(psi);
  const int K = psi.comps();
  for (std::size_t s = 0; s < out.sites(); ++s) {
    Spinor twist;
    for (int i = 0; i < K; ++i) twist += dx(s, i) * e1_mul(psi(s, i)) + dy(s, i) * e2_mul(psi(s, i));
    const auto p = phi.at(s);
    for (int m = 0; m < K; ++m) out(s, m) += p[m] * twist;
  }
  return out;
}

SpinorField dirac_along_map(const MapField& phi, const SpinorAlongMap& psi) {
  return dirac_along_map(phi, psi.values());
}

VectorField spinor_source(const MapField& phi, const SpinorField& psi) {
  require_same_grid(phi.grid(), psi.grid(), "spinor_source");
  const auto [dx, dy] = gradient(phi);
  const int K = psi.comps();
  VectorField out(phi.grid(), K);
  std::vector<Spinor> twisted(static_cast<std::size_t>(K));
  for (std::size_t s = 0; s < out.sites(); ++s) {
    for (int i = 0; i < K; ++i) {
      twisted[static_cast<std::size_t>(i)] = dx(s, i) * e1_mul(psi(s, i)) + dy(s, i) * e2_mul(psi(s, i));
    }
    for (int m = 0; m < K; ++m) {
      double v = 0.0;
      for (int i = 0; i < K; ++i) v += spinor_inner(twisted[static_cast<std::size_t>(i)], psi(s, m));
      out(s, m) = -v;
    }
  }
  return out;
}

VectorField harmonic_tension(const MapField& phi) {
  const auto [dx, dy] = gradient(phi);
  VectorField out = laplacian(phi.values());
  const int K = phi.ambient_dim();
  for (std::size_t s = 0; s < out.sites(); ++s) {
    double e = 0.0;
    for (int c = 0; c < K; ++c) e += dx(s, c) * dx(s, c) + dy(s, c) * dy(s, c);
    const auto p = phi.at(s);
    for (int c = 0; c < K; ++c) out(s, c) += e * p[c];
  }
  return out;
}

Residuals el_residuals(const MapField& phi, const SpinorAlongMap& psi) {
  require_same_grid(phi.grid(), psi.grid(), "el_residuals");
  Residuals r{harmonic_tension(phi), dirac_along_map(phi, psi)};
  r.map += spinor_source(phi, psi.values());
  return r;
}

ScalarField map_energy_density(const MapField& phi) {
  const auto [dx, dy] = gradient(phi);
  ScalarField out(phi.grid(), 1);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    double e = 0.0;
    for (int c = 0; c < phi.ambient_dim(); ++c) e += dx(s, c) * dx(s, c) + dy(s, c) * dy(s, c);
    out(s, 0) = e;
  }
  return out;
}

ScalarField spinor_energy_density(const SpinorField& psi) {
  ScalarField out(psi.grid(), 1);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    double m = 0.0;
    for (int c = 0; c < psi.comps(); ++c) m += norm2(psi(s, c));
    out(s, 0) = m * m;
  }
  return out;
}

EnergyReport energies(const MapField& phi, const SpinorAlongMap& psi, int margin) {
  require_same_grid(phi.grid(), psi.grid(), "energies");
  EnergyReport rep;
  rep.grid = phi.grid();
  rep.margin = margin;
  rep.e_map = quadrature(map_energy_density(phi));
  rep.e_spinor = quadrature(spinor_energy_density(psi.values()));
  const Residuals res = el_residuals(phi, psi);
  rep.l_value = rep.e_map + quadrature_inner(psi.values(), res.spinor);
  rep.residual_map = interior_max_norm(res.map, margin);
  rep.residual_spinor = interior_max_norm(res.spinor, margin);
  rep.degenerate_spinor = rep.e_spinor > kDegenerateSpinorEnergy;
  return rep;
}

bool converged(const EnergyReport& report, double tol) {
  const double bound = tol * (1.0 + report.e_map);
  return report.residual_map <= bound && report.residual_spinor <= bound;
}

}  // namespace dhlab
