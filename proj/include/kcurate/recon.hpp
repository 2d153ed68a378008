#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcurate/array.hpp"
#include "kcurate/volume.hpp"

namespace kcurate {

// 1-D Cartesian line mask along kx.
struct UndersamplingMask {
  std::vector<std::uint8_t> lines;
  double acceleration = 1.0;
  double center_fraction = 0.0;
  std::size_t center_lines = 0;
  std::size_t offset = 0;
  std::uint64_t seed = 0;

  std::size_t sampled() const;
};

// Center fraction schedule: 0.08 up to R = 4, linear down to 0.04 at R = 8 and beyond.
double center_fraction_for(double acceleration);

// Fully sampled contiguous center block of round(cf * N) lines, the remaining
// floor(N / R) - center lines spread at equal stride over the other lines,
// starting at a seeded offset in [0, stride).
UndersamplingMask make_mask(std::size_t num_lines, double acceleration, std::uint64_t seed);

CoilStack apply_mask(const CoilStack& kspace, const UndersamplingMask& mask);

// Sum_i conj(S_i) F^-1 y_i / Sum_i |S_i|^2, zero where the denominator < 1e-12.
ComplexImage mvue(const CoilStack& kspace, const SensitivityMaps& maps);

MagnitudeImage rss(const CoilStack& kspace);

// Root-sum-of-squares of the masked k-space.
MagnitudeImage zero_filled(const CoilStack& kspace, const UndersamplingMask& mask);

struct MapEstimateOptions {
  // When positive, pixels whose full-resolution RSS is at or below
  // background_fraction * its maximum get zero sensitivity.
  double background_fraction = 0.0;
};

// S_i = lowpass(F^-1 y_i) / rss(lowpass), from a Gaussian-tapered central
// k-space block covering center_fraction of each axis.
SensitivityMaps estimate_maps_lowfreq(const CoilStack& kspace, double center_fraction,
                                      const MapEstimateOptions& opts = {});

// Sum_i |S_i|^2 > tau * max, followed by one 3x3 morphological closing.
BoolImage foreground_mask(const SensitivityMaps& maps, double tau_fraction = 0.5);

enum class ReconMethod { Mvue, Rss, ZeroFilled };

std::string to_string(ReconMethod m);
ReconMethod recon_method_from_string(const std::string& s);

struct VolumeRecon {
  std::vector<ComplexImage> images;
  std::vector<SensitivityMaps> maps;  // filled for MVUE
};

struct ReconOptions {
  ReconMethod method = ReconMethod::Mvue;
  double map_center_fraction = 0.16;
  MapEstimateOptions maps{};
};

// Per-slice reconstruction of a volume, parallel over slices.
VolumeRecon reconstruct_volume(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask);

}  // namespace kcurate
