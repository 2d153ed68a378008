#pragma once

#include <cstdint>
#include <vector>

#include "kcurate/array.hpp"
#include "kcurate/volume.hpp"

namespace kcurate {

// Ellipse in normalized coordinates: x, y in [-1, 1] across the grid.
struct Ellipse {
  double cx = 0.0, cy = 0.0;
  double ax = 0.5, ay = 0.5;  // semi-axes
  double angle = 0.0;         // radians
  double intensity = 1.0;     // in [0, 1]
};

struct PhantomSpec {
  std::size_t ny = 64, nx = 64;
  std::vector<Ellipse> ellipses;
  std::size_t coil_count = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  ComplexImage image;
  SensitivityMaps maps;
};

// Ellipses are painted in order, later ones overwriting earlier ones, so the
// image stays in [0, 1]. Coil maps are Gaussian-profile spots with a linear
// phase, normalized so that the sum over coils of |S_i|^2 is 1 everywhere.
Phantom make_phantom(const PhantomSpec& spec);

// Per-coil y_i = F(S_i x) + z_i with unitary centered F. Noise is complex
// Gaussian with E|z|^2 = noise_sigma^2, drawn from Philox keyed by
// (seed, coil).
CoilStack simulate_kspace(const ComplexImage& image, const SensitivityMaps& maps, double noise_sigma,
                          std::uint64_t seed);

// A random head-like ellipse family; `family` shifts the shape statistics so
// different phantom sources cluster apart in embedding space.
std::vector<Ellipse> random_ellipses(std::uint64_t seed, int family = 0);

// Multi-slice phantom volume: the ellipse family shrinks, drifts and turns
// smoothly along the slice axis.
KSpaceVolume make_phantom_volume(const std::string& volume_id, std::size_t slices, std::size_t size,
                                 std::size_t coils, double noise_sigma, std::uint64_t seed, int family = 0);

}  // namespace kcurate
