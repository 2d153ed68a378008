#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kcurate/array.hpp"
#include "kcurate/volume.hpp"

namespace kcurate::h5 {

// Containers follow the fastMRI layout: one file per volume holding a complex64
// dataset `kspace` stored as an {r, i} float32 little-endian compound.
// Writers disable object timestamps so identical content gives identical bytes.

struct RawKSpace {
  std::vector<std::size_t> shape;
  std::vector<cfloat> data;
  std::map<std::string, std::string> attributes;
};

RawKSpace read_kspace_raw(const std::filesystem::path& path);
void write_kspace_raw(const std::filesystem::path& path, const RawKSpace& raw);

// Shape only, without reading the payload.
std::vector<std::size_t> kspace_shape(const std::filesystem::path& path);

KSpaceVolume load_volume(const std::filesystem::path& path);
void save_volume(const std::filesystem::path& path, const KSpaceVolume& vol,
                 const std::map<std::string, std::string>& attributes = {});

// Rank-4 [coil, kz, ky, kx] container of a 3-D acquisition.
KSpace3D load_kspace_3d(const std::filesystem::path& path);
void save_kspace_3d(const std::filesystem::path& path, const KSpace3D& vol);

// Reconstruction container: `reconstruction` float32 [slice, ny, nx, 2] holding
// real/imaginary pairs, `mask` uint8 [kx] and, for MVUE, `maps` complex64
// [slice, coil, ny, nx].
struct ReconVolume {
  std::string volume_id;
  std::string method;
  double acceleration = 1.0;
  std::uint64_t seed = 0;
  std::vector<ComplexImage> images;
  std::vector<std::uint8_t> mask;
  std::vector<SensitivityMaps> maps;
};

void save_recon(const std::filesystem::path& path, const ReconVolume& recon);
ReconVolume load_recon(const std::filesystem::path& path);

}  // namespace kcurate::h5
