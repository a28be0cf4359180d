#include "dhlab/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <sstream>

#include "dhlab/errors.hpp"

namespace dhlab {

namespace {

using cd = std::complex<double>;

std::array<double, 3> rotate(const Rotation& r, const std::array<double, 3>& v) {
  std::array<double, 3> out{};
  for (int a = 0; a < 3; ++a) out[a] = r[a][0] * v[0] + r[a][1] * v[1] + r[a][2] * v[2];
  return out;
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("bubble scale must be positive and finite");
}

MapField sample_map(const Grid& grid, const auto& value_at) {
  VectorField v(grid, 3);
  for (int j = 0; j < grid.sites_y(); ++j) {
    for (int i = 0; i < grid.sites_x(); ++i) {
      const auto p = value_at(grid.x(i), grid.y(j));
      for (int c = 0; c < 3; ++c) v.at(i, j, c) = p[static_cast<std::size_t>(c)];
    }
  }
  // Renormalize against rounding so the sphere check at 1e-12 holds.
  return project_sphere(v);
}

// Offset from center, using the nearest periodic image on a torus.
Point offset(const Grid& g, Point center, double x, double y) {
  double dx = x - center[0], dy = y - center[1];
  if (g.periodic()) {
    dx -= g.lx() * std::round(dx / g.lx());
    dy -= g.ly() * std::round(dy / g.ly());
  }
  return {dx, dy};
}

void require_disk_inside(const Grid& g, Point center, double radius, const char* op) {
  if (!(radius >= 0.0)) throw InvalidArgument(std::string(op) + ": radius must be non-negative");
  if (g.periodic()) {
    if (radius > 0.5 * std::min(g.lx(), g.ly()))
      throw InvalidArgument(std::string(op) + ": disk wraps around the torus");
    return;
  }
  const double tol = 1e-12 * std::max(g.lx(), g.ly());
  if (center[0] - radius < g.x0() - tol || center[0] + radius > g.x_max() + tol ||
      center[1] - radius < g.y0() - tol || center[1] + radius > g.y_max() + tol) {
    throw InvalidArgument(std::string(op) + ": disk of radius " + std::to_string(radius) + " leaves the domain");
  }
}

LocalEnergy band_energy(const MapField& phi, const SpinorField* psi, Point center, double inner, double outer,
                        bool include_inner) {
  const Grid& g = phi.grid();
  const ScalarField em = map_energy_density(phi);
  ScalarField es;
  if (psi) {
    if (!(psi->grid() == g)) throw PreconditionError("local_energy: fields live on different grids");
    es = spinor_energy_density(*psi);
  }
  LocalEnergy out;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      const Point d = offset(g, center, g.x(i), g.y(j));
      const double r = std::hypot(d[0], d[1]);
      if (r > outer) continue;
      if (include_inner ? r < inner : r <= inner) continue;
      const std::size_t s = g.index(i, j);
      const double w = g.weight(i, j);
      out.map += w * em(s, 0);
      if (psi) out.spinor += w * es(s, 0);
    }
  }
  return out;
}

ScalarField total_density(const MapField& phi, const SpinorField* psi) {
  ScalarField d = map_energy_density(phi);
  if (psi) d += spinor_energy_density(*psi);
  return d;
}

void append_number(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

std::array<double, 3> inverse_stereographic(cd u) {
  const double r2 = std::norm(u);
  const double d = 1.0 + r2;
  return {2.0 * u.real() / d, 2.0 * u.imag() / d, (r2 - 1.0) / d};
}

std::array<double, 3> inverse_stereographic_reciprocal(cd v) {
  const double r2 = std::norm(v);
  const double d = 1.0 + r2;
  return {2.0 * v.real() / d, -2.0 * v.imag() / d, (1.0 - r2) / d};
}

std::array<double, 3> bubble_value(const BubbleSpec& spec, double x, double y) {
  require_lambda(spec.lambda);
  const cd u((x - spec.center[0]) / spec.lambda, (y - spec.center[1]) / spec.lambda);
  return rotate(spec.orientation, inverse_stereographic(u));
}

MapField stereographic_bubble(const BubbleSpec& spec, const Grid& grid, int n) {
  if (n != 2) throw Unsupported("stereographic_bubble: only the 2-sphere target is supported");
  if (grid.periodic()) throw UnsupportedTopology("stereographic_bubble: needs a rectangle grid");
  require_lambda(spec.lambda);
  return sample_map(grid, [&](double x, double y) { return bubble_value(spec, x, y); });
}

double bubble_disk_energy(double lambda, double radius) {
  const double r2 = radius * radius;
  return 8.0 * std::numbers::pi * r2 / (lambda * lambda + r2);
}

MapField bubble_superposition(const std::vector<BubbleSpec>& specs, const Grid& grid) {
  if (specs.empty()) throw InvalidArgument("bubble_superposition: no bubbles");
  for (const auto& s : specs) require_lambda(s.lambda);
  const Rotation& rot = specs.front().orientation;
  return sample_map(grid, [&](double x, double y) {
    const cd z(x, y);
    cd sum = 0.0;
    for (const auto& s : specs) {
      const cd dz = z - cd(s.center[0], s.center[1]);
      if (dz == cd(0.0, 0.0)) return rotate(rot, std::array<double, 3>{0.0, 0.0, -1.0});
      sum += s.lambda / dz;
    }
    // w = 1 / sum.
    return rotate(rot, inverse_stereographic_reciprocal(sum));
  });
}

cd jacobi_theta1(cd z) {
  const double q = std::exp(-std::numbers::pi);
  cd sum = 0.0;
  for (int n = 0; n < 16; ++n) {
    const double e = (n + 0.5) * (n + 0.5);
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    sum += sign * std::pow(q, e) * std::sin(static_cast<double>(2 * n + 1) * z);
  }
  return 2.0 * sum;
}

MapField elliptic_bubble(const EllipticBubbleSpec& spec, const Grid& torus) {
  if (!torus.periodic()) throw UnsupportedTopology("elliptic_bubble: needs a torus grid");
  if (std::abs(torus.lx() - torus.ly()) > 1e-12 * torus.lx())
    throw InvalidArgument("elliptic_bubble: needs a square torus");
  require_lambda(spec.scale);
  const double k = std::numbers::pi / torus.lx();
  const cd a = spec.zero, b = spec.pole;
  return sample_map(torus, [&](double x, double y) {
    const cd z(k * (x - spec.shift[0]), k * (y - spec.shift[1]));
    const cd num = spec.scale * jacobi_theta1(z - a) * jacobi_theta1(z + a);
    const cd den = jacobi_theta1(z - b) * jacobi_theta1(z + b);
    if (std::abs(num) <= std::abs(den)) return inverse_stereographic(num / den);
    return inverse_stereographic_reciprocal(den / num);
  });
}

SpinorField bubble_test_spinor(const BubbleSpec& spec, const Grid& grid) {
  require_lambda(spec.lambda);
  SpinorField out(grid, 3);
  const double amp = 1.0 / std::sqrt(spec.lambda);
  for (int j = 0; j < grid.sites_y(); ++j) {
    for (int i = 0; i < grid.sites_x(); ++i) {
      const double u1 = (grid.x(i) - spec.center[0]) / spec.lambda;
      const double u2 = (grid.y(j) - spec.center[1]) / spec.lambda;
      const double d = 1.0 + u1 * u1 + u2 * u2;
      const double d2 = d * d;
      const std::array<double, 3> du1{2.0 / d - 4.0 * u1 * u1 / d2, -4.0 * u1 * u2 / d2, 4.0 * u1 / d2};
      const std::array<double, 3> du2{-4.0 * u1 * u2 / d2, 2.0 / d - 4.0 * u2 * u2 / d2, 4.0 * u2 / d2};
      const auto r1 = rotate(spec.orientation, du1);
      const auto r2 = rotate(spec.orientation, du2);
      for (int c = 0; c < 3; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        out.at(i, j, c) = Spinor{Complex(amp * r1[cc], 0.0), Complex(amp * r2[cc], 0.0)};
      }
    }
  }
  return out;
}

double test_spinor_disk_energy(double lambda, double radius) {
  const double rho = radius / lambda;
  const double d = 1.0 + rho * rho;
  return 64.0 * std::numbers::pi / 3.0 * (1.0 - 1.0 / (d * d * d));
}

ConcentrationFamily concentration_family(const std::vector<double>& lambdas, const Grid& grid, bool with_spinor,
                                         Point center, const Rotation& orientation) {
  if (lambdas.empty()) throw InvalidArgument("concentration_family: empty scale list");
  ConcentrationFamily fam;
  fam.center = center;
  fam.with_spinor = with_spinor;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double l = lambdas[k];
    if (!(l > 2.0 * grid.h())) {
      throw InvalidArgument("concentration_family: lambda_" + std::to_string(k) + " = " + std::to_string(l) +
                            " is under-resolved (needs > 2h = " + std::to_string(2.0 * grid.h()) + ")");
    }
    if (k > 0 && !(l < lambdas[k - 1]))
      throw InvalidArgument("concentration_family: lambda_" + std::to_string(k) + " does not decrease");
  }
  for (double l : lambdas) {
    const BubbleSpec spec{center, l, orientation};
    MapField phi = stereographic_bubble(spec, grid);
    SpinorAlongMap psi = with_spinor ? project_tangent(phi, bubble_test_spinor(spec, grid)) : SpinorAlongMap::zero(phi);
    fam.members.push_back({l, std::move(phi), std::move(psi)});
  }
  return fam;
}

LocalEnergy local_energy(const MapField& phi, const SpinorField* psi, Point center, double radius) {
  require_disk_inside(phi.grid(), center, radius, "local_energy");
  return band_energy(phi, psi, center, 0.0, radius, true);
}

LocalEnergy annulus_energy(const MapField& phi, const SpinorField* psi, Point center, double inner, double outer) {
  if (inner > outer) throw InvalidArgument("annulus_energy: inner radius exceeds outer radius");
  if (inner < 0.0) throw InvalidArgument("annulus_energy: negative inner radius");
  require_disk_inside(phi.grid(), center, outer, "annulus_energy");
  if (inner == outer) return {};
  return band_energy(phi, psi, center, inner, outer, false);
}

IdentityTable energy_identity_experiment(const ConcentrationFamily& family, double delta, double r) {
  IdentityTable t;
  for (const auto& m : family.members) {
    const SpinorField* psi = family.with_spinor ? &m.psi.values() : nullptr;
    IdentityRow row;
    row.lambda = m.lambda;
    row.delta = delta;
    row.r = r;
    const LocalEnergy disk = local_energy(m.phi, psi, family.center, delta);
    row.e_disk = disk.map;
    row.e_spinor_disk = disk.spinor;
    const double inner = m.lambda * r;
    row.annulus_empty = inner >= delta;
    if (!row.annulus_empty) {
      const LocalEnergy ann = annulus_energy(m.phi, psi, family.center, inner, delta);
      row.e_annulus = ann.map;
      row.e_spinor_annulus = ann.spinor;
    }
    row.e_total = quadrature(total_density(m.phi, psi));
    t.rows.push_back(row);
  }
  return t;
}

std::string identity_csv(const IdentityTable& table) {
  std::ostringstream os;
  os << "lambda,delta,R,e_disk,e_annulus,e_spinor_disk,e_spinor_annulus,e_total\n";
  for (const auto& r : table.rows) {
    const double vals[] = {r.lambda, r.delta, r.r, r.e_disk, r.e_annulus, r.e_spinor_disk, r.e_spinor_annulus,
                           r.e_total};
    for (std::size_t k = 0; k < std::size(vals); ++k) {
      if (k) os << ',';
      append_number(os, vals[k]);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<BlowupCluster> detect_blowup_set(const ConcentrationFamily& family, double eps0, double r) {
  if (family.members.empty()) throw InvalidArgument("detect_blowup_set: empty family");
  const auto& last = family.members.back();
  return detect_blowup_set(last.phi, family.with_spinor ? &last.psi.values() : nullptr, eps0, r);
}

std::vector<BlowupCluster> detect_blowup_set(const MapField& phi, const SpinorField* psi, double eps0, double r) {
  const Grid& g = phi.grid();
  const int sx = g.sites_x(), sy = g.sites_y();
  const ScalarField dens = total_density(phi, psi);

  // Row prefix sums of weighted density.
  std::vector<double> prefix(static_cast<std::size_t>(sy) * static_cast<std::size_t>(sx + 1), 0.0);
  auto pre = [&](int j, int i) -> double& {
    return prefix[static_cast<std::size_t>(j) * static_cast<std::size_t>(sx + 1) + static_cast<std::size_t>(i)];
  };
  for (int j = 0; j < sy; ++j)
    for (int i = 0; i < sx; ++i) pre(j, i + 1) = pre(j, i) + g.weight(i, j) * dens(g.index(i, j), 0);
  auto row_sum = [&](int j, int lo, int hi) {  // inclusive, possibly wrapping on the torus
    if (g.periodic()) {
      if (hi - lo + 1 >= sx) return pre(j, sx);
      const int a = ((lo % sx) + sx) % sx;
      const int b = a + (hi - lo);
      if (b < sx) return pre(j, b + 1) - pre(j, a);
      return pre(j, sx) - pre(j, a) + pre(j, b - sx + 1);
    }
    lo = std::max(lo, 0);
    hi = std::min(hi, sx - 1);
    return hi < lo ? 0.0 : pre(j, hi + 1) - pre(j, lo);
  };

  const int reach = static_cast<int>(std::floor(r / g.h()));
  std::vector<int> half(static_cast<std::size_t>(reach + 1));
  const double rr = (r / g.h()) * (r / g.h());
  for (int dj = 0; dj <= reach; ++dj)
    half[static_cast<std::size_t>(dj)] = static_cast<int>(std::floor(std::sqrt(std::max(0.0, rr - dj * dj)) + 1e-12));

  int dj_lo = -reach, dj_hi = reach;
  if (g.periodic() && 2 * reach + 1 > sy) {
    dj_lo = -(sy - 1) / 2;
    dj_hi = sy / 2;
  }

  std::vector<double> local(g.size(), 0.0);
  std::vector<char> hot(g.size(), 0);
  for (int j = 0; j < sy; ++j) {
    for (int i = 0; i < sx; ++i) {
      double sum = 0.0;
      for (int dj = dj_lo; dj <= dj_hi; ++dj) {
        int jj = j + dj;
        if (g.periodic()) {
          jj = ((jj % sy) + sy) % sy;
        } else if (jj < 0 || jj >= sy) {
          continue;
        }
        const int w = half[static_cast<std::size_t>(std::abs(dj))];
        sum += row_sum(jj, i - w, i + w);
      }
      const std::size_t s = g.index(i, j);
      local[s] = sum;
      hot[s] = sum >= eps0;
    }
  }

  std::vector<BlowupCluster> clusters;
  std::vector<char> seen(g.size(), 0);
  for (int j = 0; j < sy; ++j) {
    for (int i = 0; i < sx; ++i) {
      const std::size_t s0 = g.index(i, j);
      if (!hot[s0] || seen[s0]) continue;
      BlowupCluster c;
      double ax = 0.0, ay = 0.0;
      std::deque<std::pair<int, int>> queue{{i, j}};
      seen[s0] = 1;
      while (!queue.empty()) {
        const auto [ci, cj] = queue.front();
        queue.pop_front();
        const std::size_t s = g.index(ci, cj);
        const Point d = offset(g, {g.x(i), g.y(j)}, g.x(ci), g.y(cj));
        ax += d[0];
        ay += d[1];
        ++c.sites;
        c.peak_energy = std::max(c.peak_energy, local[s]);
        const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& n : nb) {
          int ni = ci + n[0], nj = cj + n[1];
          if (g.periodic()) {
            ni = (ni + sx) % sx;
            nj = (nj + sy) % sy;
          } else if (ni < 0 || nj < 0 || ni >= sx || nj >= sy) {
            continue;
          }
          const std::size_t t = g.index(ni, nj);
          if (hot[t] && !seen[t]) {
            seen[t] = 1;
            queue.emplace_back(ni, nj);
          }
        }
      }
      c.centroid = {g.x(i) + ax / static_cast<double>(c.sites), g.y(j) + ay / static_cast<double>(c.sites)};
      clusters.push_back(c);
    }
  }
  return clusters;
}

nlohmann::json blowup_json(const std::vector<BlowupCluster>& clusters, double eps0, double r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& c : clusters) {
    pts.push_back({{"x", c.centroid[0]}, {"y", c.centroid[1]}, {"sites", c.sites}, {"peak_energy", c.peak_energy}});
  }
  return {{"eps0", eps0}, {"radius", r}, {"clusters", clusters.size()}, {"points", pts}};
}

RegularityReport epsilon_regularity_probe(const MapField& phi, const SpinorField* psi, int margin, double eps0) {
  const Grid& g = phi.grid();
  RegularityReport rep;
  rep.margin = margin;
  rep.eps0 = eps0;
  const ScalarField em = map_energy_density(phi);
  const double e_map = quadrature(em);
  double sup_d = 0.0, sup_psi = 0.0, e_spinor = 0.0;
  ScalarField es;
  if (psi) {
    es = spinor_energy_density(*psi);
    e_spinor = quadrature(es);
  }
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      if (!g.interior(i, j, margin)) continue;
      const std::size_t s = g.index(i, j);
      sup_d = std::max(sup_d, std::sqrt(em(s, 0)));
      if (psi) sup_psi = std::max(sup_psi, std::pow(es(s, 0), 0.25));
    }
  }
  rep.trivial_map = !(e_map > 0.0);
  rep.trivial_spinor = !(e_spinor > 0.0);
  rep.r1 = rep.trivial_map ? 0.0 : sup_d / std::sqrt(e_map);
  rep.r2 = rep.trivial_spinor ? 0.0 : sup_psi / std::pow(e_spinor, 0.25);
  rep.energy = e_map + e_spinor;
  rep.hypothesis = rep.energy < eps0;
  return rep;
}

nlohmann::json regularity_json(const RegularityReport& r) {
  return {{"r1", r.r1},
          {"r2", r.r2},
          {"trivial_map", r.trivial_map},
          {"trivial_spinor", r.trivial_spinor},
          {"energy", r.energy},
          {"eps0", r.eps0},
          {"hypothesis", r.hypothesis},
          {"margin", r.margin}};
}

}  // namespace dhlab
