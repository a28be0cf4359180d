#pragma once

#include <cstdint>

#include "dhlab/grid.hpp"
#include "dhlab/sphere.hpp"

namespace dhlab {

// Truncated Fourier series sum_k (a_k cos + b_k sin)(2 pi k.x / L) with
// Gaussian coefficients damped by |k|^{-decay}. Deterministic in the seed.
struct FourierSpec {
  int max_mode = 3;
  double decay = 2.0;
  bool include_mean = false;
};

VectorField random_smooth_vector(const Grid& grid, int comps, std::uint64_t seed, const FourierSpec& spec = {});

// Each complex spinor entry is an independent real series for its real and imaginary part.
SpinorField random_smooth_spinor(const Grid& grid, int comps, std::uint64_t seed, const FourierSpec& spec = {});

// Smooth map into S^n through the exponential map at the north pole,
// phi = (sin|w| w/|w|, cos|w|) for a random R^n field w scaled by amplitude.
// Unlike projecting a random vector field, this never passes near the origin.
MapField random_smooth_map(const Grid& grid, int n, std::uint64_t seed, double amplitude = 1.0,
                           const FourierSpec& spec = {});

}  // namespace dhlab
