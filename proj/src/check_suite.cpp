#include "dhlab/check_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dhlab/conservation.hpp"
#include "dhlab/random_fields.hpp"
#include "dhlab/reports.hpp"
#include "dhlab/sphere.hpp"

namespace dhlab {

namespace {

Mat2 mul(const Mat2& a, const Mat2& b) {
  Mat2 out{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
  return out;
}

double max_entry(const Mat2& m) {
  double w = 0.0;
  for (const auto& row : m)
    for (const auto& v : row) w = std::max(w, std::abs(v));
  return w;
}

CheckResult verdict(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

struct Pair {
  MapField phi;
  SpinorAlongMap psi;
};

Pair random_pair(const Grid& g, unsigned seed) {
  FourierSpec spec;
  spec.include_mean = true;
  MapField phi = random_smooth_map(g, 2, seed, 1.0, spec);
  SpinorAlongMap psi = project_tangent(phi, random_smooth_spinor(g, 3, seed + 1000u));
  return {std::move(phi), std::move(psi)};
}

Grid check_torus(int nx) { return make_grid(Topology::Torus, 1.0, 1.0, nx, nx, 0.0, 0.0); }

double l2(const SpinorField& f) { return std::sqrt(quadrature_inner(f, f)); }

}  // namespace

CliffordBasis check_basis(Fault fault) {
  CliffordBasis b = CliffordBasis::standard();
  if (fault == Fault::G2Sign) {
    const Complex i{0.0, 1.0};
    b.g[1] = Mat2{{{0.0, i * i}, {i * i, 0.0}}};
  }
  return b;
}

CheckResult check_clifford_square(const CliffordBasis& basis) {
  double worst = 0.0;
  for (const Mat2& g : basis.g) {
    Mat2 sq = mul(g, g);
    sq[0][0] += 1.0;
    sq[1][1] += 1.0;
    worst = std::max(worst, max_entry(sq));
  }
  return verdict("clifford square", worst, 1e-12, "max |g_a g_a + I|");
}

CheckResult check_clifford_anticommutation(const CliffordBasis& basis) {
  const Mat2 ab = mul(basis.g[0], basis.g[1]);
  const Mat2 ba = mul(basis.g[1], basis.g[0]);
  Mat2 sum{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) sum[r][c] = ab[r][c] + ba[r][c];
  return verdict("clifford anticommutation", max_entry(sum), 1e-12, "max |g_1 g_2 + g_2 g_1|");
}

CheckResult check_skew_adjointness(const CliffordBasis& basis, unsigned seed, int samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto draw = [&] { return Spinor{{n(rng), n(rng)}, {n(rng), n(rng)}}; };
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Spinor xi = draw(), eta = draw();
    const double scale = std::sqrt(norm2(xi) * norm2(eta));
    for (const Mat2& g : basis.g) {
      worst = std::max(worst, std::abs(spinor_inner(apply(g, xi), eta) + spinor_inner(xi, apply(g, eta))) / scale);
    }
  }
  return verdict("skew-adjointness", worst, 1e-12, "max relative |<e.xi, eta> + <xi, e.eta>|");
}

CheckResult check_summation_by_parts(unsigned seed, int nx) {
  const Grid g = check_torus(nx);
  const SpinorField a = random_smooth_spinor(g, 3, seed);
  const SpinorField b = random_smooth_spinor(g, 3, seed + 1u);
  const SpinorField da = dirac_flat(a), db = dirac_flat(b);
  const double lhs = quadrature_inner(da, b), rhs = quadrature_inner(a, db);
  const double scale = l2(da) * l2(b) + l2(a) * l2(db);
  return verdict("summation by parts", std::abs(lhs - rhs) / scale, 1e-12, "relative |<Da, b> - <a, Db>| on torus");
}

CheckResult check_dirac_along_map_symmetry(unsigned seed, int nx) {
  const Grid g = check_torus(nx);
  const Pair p = random_pair(g, seed);
  const SpinorAlongMap eta = project_tangent(p.phi, random_smooth_spinor(g, 3, seed + 7u));
  const SpinorField da = dirac_along_map(p.phi, p.psi), db = dirac_along_map(p.phi, eta);
  const double lhs = quadrature_inner(da, eta.values()), rhs = quadrature_inner(p.psi.values(), db);
  const double scale = l2(da) * l2(eta.values()) + l2(p.psi.values()) * l2(db);
  return verdict("dirac self-adjointness along map", std::abs(lhs - rhs) / scale, 1e-12,
                 "relative |<D psi, eta> - <psi, D eta>| for tangent fields");
}

CheckResult check_antisymmetry(unsigned seed, int nx) {
  const Grid g = check_torus(nx);
  const Pair p = random_pair(g, seed);
  const CoefficientMatrices c = coefficient_matrices(p.phi, p.psi);
  const double scale = std::max({max_abs(c.a), max_abs(c.b), 1e-300});
  return verdict("antisymmetry", antisymmetry_defect(c) / scale, 1e-12, "relative max |A^mi + A^im|, |B^mi + B^im|");
}

CheckResult check_curvature_identity(unsigned seed, int nx) {
  const Grid g = check_torus(nx);
  const Pair p = random_pair(g, seed);
  const double d = relative_difference(curvature_term(p.phi, p.psi), curvature_term_extrinsic(p.phi, p.psi));
  return verdict("identity (curvature)", d, 1e-10, "tensor route vs second fundamental form route");
}

CheckResult check_identity_chain(unsigned seed, int nx) {
  const Grid g = check_torus(nx);
  const Pair p = random_pair(g, seed);
  const VectorField dirac = divergence_dirac_form(p.phi, p.psi);
  const double d1 = relative_difference(divergence_assembled(p.phi, p.psi), dirac);
  const double d2 = relative_difference(divergence_from_residuals(p.phi, p.psi), dirac);
  return verdict("identity chain (divergence)", std::max(d1, d2), 1e-8,
                 "assembled and residual forms vs Dirac form of A_x + B_y");
}

std::vector<CheckResult> run_check_suite(const CheckOptions& o) {
  const CliffordBasis basis = check_basis(o.fault);
  return {check_clifford_square(basis),
          check_clifford_anticommutation(basis),
          check_skew_adjointness(basis, o.seed),
          check_summation_by_parts(o.seed, o.nx),
          check_dirac_along_map_symmetry(o.seed, o.nx),
          check_antisymmetry(o.seed, o.nx),
          check_curvature_identity(o.seed, o.nx),
          check_identity_chain(o.seed, o.nx)};
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::string check_table(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    os << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
       << format_double(r.value) << " <= " << format_double(r.tolerance) << '\n';
  }
  return os.str();
}

nlohmann::json check_json(const std::vector<CheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back(
        {{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"tolerance", r.tolerance}, {"detail", r.detail}});
  }
  return {{"passed", all_passed(results)}, {"checks", arr}};
}

}  // namespace dhlab
