#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "kcurate/array.hpp"

namespace kcurate {

// Multi-coil k-space volume, row-major [slice, coil, ky, kx], complex64.
struct KSpaceVolume {
  std::string volume_id;
  std::array<std::size_t, 4> dims{};  // slices, coils, ky, kx
  std::vector<cfloat> data;

  KSpaceVolume() = default;
  KSpaceVolume(std::string id, std::size_t slices, std::size_t coils, std::size_t ky, std::size_t kx);

  std::size_t slices() const { return dims[0]; }
  std::size_t coils() const { return dims[1]; }
  std::size_t ky() const { return dims[2]; }
  std::size_t kx() const { return dims[3]; }
  std::size_t slice_stride() const { return dims[1] * dims[2] * dims[3]; }

  cfloat& at(std::size_t s, std::size_t c, std::size_t y, std::size_t x) {
    return data[((s * dims[1] + c) * dims[2] + y) * dims[3] + x];
  }
  const cfloat& at(std::size_t s, std::size_t c, std::size_t y, std::size_t x) const {
    return data[((s * dims[1] + c) * dims[2] + y) * dims[3] + x];
  }

  // Copy of one slice widened to double precision.
  CoilStack slice(std::size_t s) const;
  void set_slice(std::size_t s, const CoilStack& k);

  // Throws WrongRank/ShapeMismatch on bad extents and NonFinite on NaN/Inf.
  void validate() const;
};

// Fully sampled 3-D acquisition, row-major [coil, kz, ky, kx].
struct KSpace3D {
  std::string volume_id;
  std::array<std::size_t, 4> dims{};  // coils, kz, ky, kx
  std::vector<cfloat> data;

  std::size_t coils() const { return dims[0]; }
  std::size_t kz() const { return dims[1]; }
  std::size_t ky() const { return dims[2]; }
  std::size_t kx() const { return dims[3]; }

  cfloat& at(std::size_t c, std::size_t z, std::size_t y, std::size_t x) {
    return data[((c * dims[1] + z) * dims[2] + y) * dims[3] + x];
  }
  const cfloat& at(std::size_t c, std::size_t z, std::size_t y, std::size_t x) const {
    return data[((c * dims[1] + z) * dims[2] + y) * dims[3] + x];
  }
};

enum class View { Axial, Sagittal, Coronal, Other };

std::string to_string(View v);
View view_from_string(const std::string& s);

struct ViewVolume {
  View view;
  KSpaceVolume volume;
};

// Hybrid-space conversion of a 3-D acquisition into axial (slices along z),
// coronal (along y) and sagittal (along x) stacks of 2-D k-space.
std::array<ViewVolume, 3> split_3d_to_views(const KSpace3D& vol);

}  // namespace kcurate
