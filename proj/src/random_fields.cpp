#include "dhlab/random_fields.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace dhlab {

namespace {

struct Mode {
  int kx, ky;
  double a, b;
};

// One independent real series per channel; channels are drawn in a fixed order.
std::vector<std::vector<Mode>> draw_modes(int channels, std::uint64_t seed, const FourierSpec& spec) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<Mode>> out(static_cast<std::size_t>(channels));
  for (auto& modes : out) {
    for (int ky = -spec.max_mode; ky <= spec.max_mode; ++ky) {
      for (int kx = -spec.max_mode; kx <= spec.max_mode; ++kx) {
        const bool zero = kx == 0 && ky == 0;
        if (zero && !spec.include_mean) continue;
        const double k = std::sqrt(static_cast<double>(kx * kx + ky * ky));
        const double damp = zero ? 1.0 : std::pow(k, -spec.decay);
        const double a = normal(rng) * damp;
        const double b = normal(rng) * damp;
        modes.push_back({kx, ky, a, b});
      }
    }
  }
  return out;
}

double evaluate(const std::vector<Mode>& modes, double u, double v) {
  double s = 0.0;
  for (const Mode& m : modes) {
    const double arg = 2.0 * std::numbers::pi * (m.kx * u + m.ky * v);
    s += m.a * std::cos(arg) + m.b * std::sin(arg);
  }
  return s;
}

}  // namespace

VectorField random_smooth_vector(const Grid& grid, int comps, std::uint64_t seed, const FourierSpec& spec) {
  const auto modes = draw_modes(comps, seed, spec);
  VectorField f(grid, comps);
  for (int j = 0; j < grid.sites_y(); ++j) {
    for (int i = 0; i < grid.sites_x(); ++i) {
      const double u = (grid.x(i) - grid.x0()) / grid.lx();
      const double v = (grid.y(j) - grid.y0()) / grid.ly();
      for (int c = 0; c < comps; ++c) f.at(i, j, c) = evaluate(modes[static_cast<std::size_t>(c)], u, v);
    }
  }
  return f;
}

SpinorField random_smooth_spinor(const Grid& grid, int comps, std::uint64_t seed, const FourierSpec& spec) {
  const auto modes = draw_modes(4 * comps, seed, spec);
  SpinorField f(grid, comps);
  for (int j = 0; j < grid.sites_y(); ++j) {
    for (int i = 0; i < grid.sites_x(); ++i) {
      const double u = (grid.x(i) - grid.x0()) / grid.lx();
      const double v = (grid.y(j) - grid.y0()) / grid.ly();
      for (int c = 0; c < comps; ++c) {
        const auto* m = &modes[static_cast<std::size_t>(4 * c)];
        f.at(i, j, c) = Spinor{{evaluate(m[0], u, v), evaluate(m[1], u, v)},
                               {evaluate(m[2], u, v), evaluate(m[3], u, v)}};
      }
    }
  }
  return f;
}

MapField random_smooth_map(const Grid& grid, int n, std::uint64_t seed, double amplitude, const FourierSpec& spec) {
  const VectorField w = random_smooth_vector(grid, n, seed, spec);
  VectorField out(grid, n + 1);
  for (std::size_t s = 0; s < w.sites(); ++s) {
    double r2 = 0.0;
    for (int c = 0; c < n; ++c) r2 += w(s, c) * w(s, c);
    const double r = amplitude * std::sqrt(r2);
    const double sinc = r > 1e-8 ? std::sin(r) / r : 1.0 - r * r / 6.0;
    for (int c = 0; c < n; ++c) out(s, c) = sinc * amplitude * w(s, c);
    out(s, n) = std::cos(r);
  }
  return project_sphere(out);
}

}  // namespace dhlab
