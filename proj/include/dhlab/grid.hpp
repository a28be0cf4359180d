#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dhlab/clifford.hpp"

namespace dhlab {

enum class Topology { Torus, Rectangle };

std::string to_string(Topology t);
Topology topology_from_string(std::string_view s);

enum class Axis { X = 0, Y = 1 };

// Flat rectangular domain with square cells of side h.
//
// A torus of nx x ny cells carries nx x ny sites (x_i = x0 + i h, periodic).
// A rectangle of nx x ny cells carries (nx+1) x (ny+1) vertex sites including
// the boundary, so that trapezoidal quadrature and one-sided closures apply.
class Grid {
 public:
  Grid() = default;

  Topology topology() const { return topology_; }
  bool periodic() const { return topology_ == Topology::Torus; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  int sites_x() const { return periodic() ? nx_ : nx_ + 1; }
  int sites_y() const { return periodic() ? ny_ : ny_ + 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(sites_x()) * static_cast<std::size_t>(sites_y());
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(sites_x()) +
           static_cast<std::size_t>(i);
  }

  double x(int i) const { return x0_ + i * h_; }
  double y(int j) const { return y0_ + j * h_; }
  double x_max() const { return x0_ + lx_; }
  double y_max() const { return y0_ + ly_; }

  // Quadrature weight of site (i, j): h^2 on the torus, trapezoidal on the rectangle.
  double weight(int i, int j) const;

  // True when the site is at least `margin` sites away from the rectangle boundary.
  bool interior(int i, int j, int margin) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  friend Grid make_grid(Topology, double, double, int, int, double, double);
  Topology topology_ = Topology::Torus;
  double lx_ = 0, ly_ = 0, x0_ = 0, y0_ = 0, h_ = 0;
  int nx_ = 0, ny_ = 0;
};

// Origin defaults to the centered domain [-lx/2, lx/2] x [-ly/2, ly/2].
Grid make_grid(Topology topology, double lx, double ly, int nx, int ny);
Grid make_grid(Topology topology, double lx, double ly, int nx, int ny, double x0, double y0);

// Per-site array of `comps` values of type T over a grid.
template <class T>
class Field {
 public:
  Field() = default;
  Field(Grid grid, int comps, T init = T{})
      : grid_(std::move(grid)), comps_(comps), data_(grid_.size() * static_cast<std::size_t>(comps), init) {}

  const Grid& grid() const { return grid_; }
  int comps() const { return comps_; }
  std::size_t sites() const { return grid_.size(); }

  T& operator()(std::size_t site, int c) { return data_[site * comps_ + c]; }
  const T& operator()(std::size_t site, int c) const { return data_[site * comps_ + c]; }
  T& at(int i, int j, int c) { return (*this)(grid_.index(i, j), c); }
  const T& at(int i, int j, int c) const { return (*this)(grid_.index(i, j), c); }

  std::span<T> site(std::size_t s) { return {data_.data() + s * comps_, static_cast<std::size_t>(comps_)}; }
  std::span<const T> site(std::size_t s) const {
    return {data_.data() + s * comps_, static_cast<std::size_t>(comps_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Field& o) const { return grid_ == o.grid_ && comps_ == o.comps_; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);

 private:
  Grid grid_;
  int comps_ = 0;
  std::vector<T> data_;
};

using ScalarField = Field<double>;
using VectorField = Field<double>;
using SpinorField = Field<Spinor>;

// Centered second-order first difference; second-order one-sided on the rectangle boundary.
template <class T>
Field<T> diff(const Field<T>& f, Axis axis);

// Three-point second difference; second-order one-sided on the rectangle boundary.
template <class T>
Field<T> second_diff(const Field<T>& f, Axis axis);

// Five-point Laplacian, i.e. second_diff(x) + second_diff(y).
template <class T>
Field<T> laplacian(const Field<T>& f);

// Flat Dirac operator e_1 . d_x + e_2 . d_y, componentwise over the spinor array.
SpinorField dirac_flat(const SpinorField& psi);

// h^2-weighted sum (trapezoidal on the rectangle), fixed row-major order.
double quadrature(const ScalarField& f);

// Quadrature of sum_c <a_c, b_c>.
double quadrature_inner(const SpinorField& a, const SpinorField& b);

// Max over sites with interior(margin) of the Euclidean norm across components.
double interior_max_norm(const VectorField& f, int margin);
double interior_max_norm(const SpinorField& f, int margin);

template <class T>
struct Resampled {
  Field<T> field;
  std::size_t out_of_domain = 0;  // samples clamped (rectangle) or wrapped (torus)
};

enum class RescaleKind { Map, Spinor };

// Conformal blow-up resampling onto the same grid by bilinear interpolation:
//   map:    u(x) = f(center + lambda x), renormalized per site
//   spinor: u(x) = lambda^{-1/2} f(center + lambda x)
Resampled<double> rescale_conformal(const VectorField& f, double lambda,
                                    std::array<double, 2> center, RescaleKind kind = RescaleKind::Map);
Resampled<Spinor> rescale_conformal(const SpinorField& f, double lambda, std::array<double, 2> center);

// Bilinear sample of component c at physical point (x, y).
template <class T>
T sample_bilinear(const Field<T>& f, double x, double y, int c, bool* outside = nullptr);

}  // namespace dhlab
