#include "dhlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dhlab/errors.hpp"

namespace dhlab {

std::string to_string(Topology t) { return t == Topology::Torus ? "torus" : "rectangle"; }

Topology topology_from_string(std::string_view s) {
  if (s == "torus") return Topology::Torus;
  if (s == "rectangle") return Topology::Rectangle;
  throw InvalidArgument("unknown topology '" + std::string(s) + "' (expected torus|rectangle)");
}

Grid make_grid(Topology topology, double lx, double ly, int nx, int ny) {
  return make_grid(topology, lx, ly, nx, ny, -0.5 * lx, -0.5 * ly);
}

Grid make_grid(Topology topology, double lx, double ly, int nx, int ny, double x0, double y0) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw InvalidArgument("make_grid: side lengths must be positive and finite");
  }
  if (nx < 8 || ny < 8) {
    std::ostringstream os;
    os << "make_grid: need at least 8 cells per direction, got " << nx << " x " << ny;
    throw InvalidArgument(os.str());
  }
  const double hx = lx / nx;
  const double hy = ly / ny;
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
    std::ostringstream os;
    os << "make_grid: non-square cells (hx = " << hx << ", hy = " << hy << ")";
    throw InvalidArgument(os.str());
  }
  Grid g;
  g.topology_ = topology;
  g.lx_ = lx;
  g.ly_ = ly;
  g.nx_ = nx;
  g.ny_ = ny;
  g.x0_ = x0;
  g.y0_ = y0;
  g.h_ = hx;
  return g;
}

double Grid::weight(int i, int j) const {
  const double w = h_ * h_;
  if (periodic()) return w;
  const double wx = (i == 0 || i == nx_) ? 0.5 : 1.0;
  const double wy = (j == 0 || j == ny_) ? 0.5 : 1.0;
  return w * wx * wy;
}

bool Grid::interior(int i, int j, int margin) const {
  if (periodic()) return true;
  return i >= margin && j >= margin && i <= nx_ - margin && j <= ny_ - margin;
}

template <class T>
Field<T>& Field<T>::operator+=(const Field& o) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

template <class T>
Field<T>& Field<T>::operator-=(const Field& o) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

template <class T>
Field<T>& Field<T>::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

namespace {

// Runs `kernel(out_site, line_index, k, n)` for every site, where line_index(m)
// maps a position m along `axis` to the flat site index on the same line.
template <class Kernel>
void for_each_line_site(const Grid& g, Axis axis, Kernel&& kernel) {
  const int sx = g.sites_x();
  const int sy = g.sites_y();
  for (int j = 0; j < sy; ++j) {
    for (int i = 0; i < sx; ++i) {
      const std::size_t s = g.index(i, j);
      if (axis == Axis::X) {
        kernel(s, [&](int m) { return g.index(m, j); }, i, sx);
      } else {
        kernel(s, [&](int m) { return g.index(i, m); }, j, sy);
      }
    }
  }
}

}  // namespace

template <class T>
Field<T> diff(const Field<T>& f, Axis axis) {
  const Grid& g = f.grid();
  Field<T> out(g, f.comps());
  const double inv2h = 1.0 / (2.0 * g.h());
  const int nc = f.comps();
  const bool periodic = g.periodic();
  for_each_line_site(g, axis, [&](std::size_t s, auto line, int k, int n) {
    if (periodic) {
      const std::size_t a = line(k + 1 == n ? 0 : k + 1);
      const std::size_t b = line(k == 0 ? n - 1 : k - 1);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(a, c) - f(b, c)) * inv2h;
    } else if (k == 0) {
      const std::size_t s1 = line(1), s2 = line(2);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(s, c) * -3.0 + f(s1, c) * 4.0 - f(s2, c)) * inv2h;
    } else if (k == n - 1) {
      const std::size_t s1 = line(n - 2), s2 = line(n - 3);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(s, c) * 3.0 - f(s1, c) * 4.0 + f(s2, c)) * inv2h;
    } else {
      const std::size_t a = line(k + 1), b = line(k - 1);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(a, c) - f(b, c)) * inv2h;
    }
  });
  return out;
}

template <class T>
Field<T> second_diff(const Field<T>& f, Axis axis) {
  const Grid& g = f.grid();
  Field<T> out(g, f.comps());
  const double invh2 = 1.0 / (g.h() * g.h());
  const int nc = f.comps();
  const bool periodic = g.periodic();
  for_each_line_site(g, axis, [&](std::size_t s, auto line, int k, int n) {
    if (periodic) {
      const std::size_t a = line(k + 1 == n ? 0 : k + 1);
      const std::size_t b = line(k == 0 ? n - 1 : k - 1);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(a, c) - f(s, c) * 2.0 + f(b, c)) * invh2;
    } else if (k == 0 || k == n - 1) {
      const int d = k == 0 ? 1 : -1;
      const std::size_t s1 = line(k + d), s2 = line(k + 2 * d), s3 = line(k + 3 * d);
      for (int c = 0; c < nc; ++c) {
        out(s, c) = (f(s, c) * 2.0 - f(s1, c) * 5.0 + f(s2, c) * 4.0 - f(s3, c)) * invh2;
      }
    } else {
      const std::size_t a = line(k + 1), b = line(k - 1);
      for (int c = 0; c < nc; ++c) out(s, c) = (f(a, c) - f(s, c) * 2.0 + f(b, c)) * invh2;
    }
  });
  return out;
}

template <class T>
Field<T> laplacian(const Field<T>& f) {
  Field<T> out = second_diff(f, Axis::X);
  out += second_diff(f, Axis::Y);
  return out;
}

SpinorField dirac_flat(const SpinorField& psi) {
  const SpinorField dx = diff(psi, Axis::X);
  const SpinorField dy = diff(psi, Axis::Y);
  SpinorField out(psi.grid(), psi.comps());
  for (std::size_t k = 0; k < out.data().size(); ++k) {
    out.data()[k] = e1_mul(dx.data()[k]) + e2_mul(dy.data()[k]);
  }
  return out;
}

double quadrature(const ScalarField& f) {
  const Grid& g = f.grid();
  double sum = 0.0;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      double v = 0.0;
      for (int c = 0; c < f.comps(); ++c) v += f.at(i, j, c);
      sum += g.weight(i, j) * v;
    }
  }
  return sum;
}

double quadrature_inner(const SpinorField& a, const SpinorField& b) {
  if (!a.same_shape(b)) throw PreconditionError("quadrature_inner: field shapes differ");
  const Grid& g = a.grid();
  double sum = 0.0;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      double v = 0.0;
      for (int c = 0; c < a.comps(); ++c) v += spinor_inner(a.at(i, j, c), b.at(i, j, c));
      sum += g.weight(i, j) * v;
    }
  }
  return sum;
}

double interior_max_norm(const VectorField& f, int margin) {
  const Grid& g = f.grid();
  double best = 0.0;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      if (!g.interior(i, j, margin)) continue;
      double s = 0.0;
      for (int c = 0; c < f.comps(); ++c) s += f.at(i, j, c) * f.at(i, j, c);
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

double interior_max_norm(const SpinorField& f, int margin) {
  const Grid& g = f.grid();
  double best = 0.0;
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      if (!g.interior(i, j, margin)) continue;
      double s = 0.0;
      for (int c = 0; c < f.comps(); ++c) s += norm2(f.at(i, j, c));
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

template <class T>
T sample_bilinear(const Field<T>& f, double x, double y, int c, bool* outside) {
  const Grid& g = f.grid();
  double fx = (x - g.x0()) / g.h();
  double fy = (y - g.y0()) / g.h();
  bool out = false;
  int i0, j0, i1, j1;
  double tx, ty;
  if (g.periodic()) {
    const double nx = g.nx(), ny = g.ny();
    if (fx < 0.0 || fx >= nx || fy < 0.0 || fy >= ny) out = true;
    fx -= nx * std::floor(fx / nx);
    fy -= ny * std::floor(fy / ny);
    i0 = std::min(static_cast<int>(fx), g.nx() - 1);
    j0 = std::min(static_cast<int>(fy), g.ny() - 1);
    tx = fx - i0;
    ty = fy - j0;
    i1 = (i0 + 1) % g.nx();
    j1 = (j0 + 1) % g.ny();
  } else {
    const double eps = 1e-9;
    if (fx < -eps || fx > g.nx() + eps || fy < -eps || fy > g.ny() + eps) out = true;
    fx = std::clamp(fx, 0.0, static_cast<double>(g.nx()));
    fy = std::clamp(fy, 0.0, static_cast<double>(g.ny()));
    i0 = std::min(static_cast<int>(fx), g.nx() - 1);
    j0 = std::min(static_cast<int>(fy), g.ny() - 1);
    tx = fx - i0;
    ty = fy - j0;
    i1 = i0 + 1;
    j1 = j0 + 1;
  }
  if (outside) *outside = out;
  return f.at(i0, j0, c) * ((1.0 - tx) * (1.0 - ty)) + f.at(i1, j0, c) * (tx * (1.0 - ty)) +
         f.at(i0, j1, c) * ((1.0 - tx) * ty) + f.at(i1, j1, c) * (tx * ty);
}

namespace {

template <class T, class Finish>
Resampled<T> resample(const Field<T>& f, double lambda, std::array<double, 2> center, Finish&& finish) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("rescale_conformal: scale must be positive and finite");
  }
  const Grid& g = f.grid();
  Resampled<T> r{Field<T>(g, f.comps()), 0};
  for (int j = 0; j < g.sites_y(); ++j) {
    for (int i = 0; i < g.sites_x(); ++i) {
      const double px = center[0] + lambda * g.x(i);
      const double py = center[1] + lambda * g.y(j);
      bool outside = false;
      for (int c = 0; c < f.comps(); ++c) r.field.at(i, j, c) = sample_bilinear(f, px, py, c, &outside);
      if (outside) ++r.out_of_domain;
      finish(r.field.site(g.index(i, j)));
    }
  }
  return r;
}

}  // namespace

Resampled<double> rescale_conformal(const VectorField& f, double lambda, std::array<double, 2> center,
                                    RescaleKind kind) {
  if (kind == RescaleKind::Map) {
    return resample(f, lambda, center, [](std::span<double> v) {
      double n = 0.0;
      for (double x : v) n += x * x;
      n = std::sqrt(n);
      if (n > 0.0) {
        for (double& x : v) x /= n;
      }
    });
  }
  const double w = 1.0 / std::sqrt(lambda);
  return resample(f, lambda, center, [w](std::span<double> v) {
    for (double& x : v) x *= w;
  });
}

Resampled<Spinor> rescale_conformal(const SpinorField& f, double lambda, std::array<double, 2> center) {
  const double w = 1.0 / std::sqrt(lambda);
  return resample(f, lambda, center, [w](std::span<Spinor> v) {
    for (Spinor& x : v) x *= w;
  });
}

template class Field<double>;
template class Field<Spinor>;
template Field<double> diff(const Field<double>&, Axis);
template Field<Spinor> diff(const Field<Spinor>&, Axis);
template Field<double> second_diff(const Field<double>&, Axis);
template Field<Spinor> second_diff(const Field<Spinor>&, Axis);
template Field<double> laplacian(const Field<double>&);
template Field<Spinor> laplacian(const Field<Spinor>&);
template double sample_bilinear(const Field<double>&, double, double, int, bool*);
template Spinor sample_bilinear(const Field<Spinor>&, double, double, int, bool*);

}  // namespace dhlab
