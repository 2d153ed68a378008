#include "kcurate/volume.hpp"

#include <algorithm>
#include <cmath>

#include "kcurate/fft.hpp"

namespace kcurate {

RealImage SensitivityMaps::energy() const {
  RealImage e(maps.ny, maps.nx, 0.0);
  for (std::size_t c = 0; c < maps.coils; ++c) {
    auto plane = maps.coil(c);
    for (std::size_t p = 0; p < plane.size(); ++p) e.data[p] += std::norm(plane[p]);
  }
  return e;
}

RealImage magnitude(const ComplexImage& img) {
  RealImage out(img.ny, img.nx);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(), [](cdouble v) { return std::abs(v); });
  return out;
}

double max_value(const RealImage& img) {
  return img.data.empty() ? 0.0 : *std::max_element(img.data.begin(), img.data.end());
}

KSpaceVolume::KSpaceVolume(std::string id, std::size_t slices, std::size_t coils, std::size_t ky, std::size_t kx)
    : volume_id(std::move(id)), dims{slices, coils, ky, kx}, data(slices * coils * ky * kx) {}

CoilStack KSpaceVolume::slice(std::size_t s) const {
  require(s < slices(), ErrorCode::InvalidArgument, "slice index out of range");
  CoilStack out(coils(), ky(), kx());
  const cfloat* src = data.data() + s * slice_stride();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = cdouble(src[i].real(), src[i].imag());
  return out;
}

void KSpaceVolume::set_slice(std::size_t s, const CoilStack& k) {
  require(s < slices(), ErrorCode::InvalidArgument, "slice index out of range");
  require(k.coils == coils() && k.ny == ky() && k.nx == kx(), ErrorCode::ShapeMismatch, "slice shape");
  cfloat* dst = data.data() + s * slice_stride();
  for (std::size_t i = 0; i < k.data.size(); ++i)
    dst[i] = cfloat(static_cast<float>(k.data[i].real()), static_cast<float>(k.data[i].imag()));
}

void KSpaceVolume::validate() const {
  require(slices() >= 1 && coils() >= 1, ErrorCode::ShapeMismatch, "volume needs >= 1 slice and >= 1 coil");
  require(ky() >= 8 && kx() >= 8, ErrorCode::ShapeMismatch, "volume needs ky, kx >= 8");
  require(data.size() == slices() * slice_stride(), ErrorCode::ShapeMismatch, "data length does not match dims");
  for (const auto& v : data)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::NonFinite,
            "volume " + volume_id + " has non-finite entries");
}

std::string to_string(View v) {
  switch (v) {
    case View::Axial: return "axial";
    case View::Sagittal: return "sagittal";
    case View::Coronal: return "coronal";
    case View::Other: return "other";
  }
  return "other";
}

View view_from_string(const std::string& s) {
  if (s == "axial") return View::Axial;
  if (s == "sagittal") return View::Sagittal;
  if (s == "coronal") return View::Coronal;
  if (s == "other") return View::Other;
  fail(ErrorCode::InvalidArgument, "unknown view '" + s + "'");
}

std::array<ViewVolume, 3> split_3d_to_views(const KSpace3D& vol) {
  const auto [nc, nz, ny, nx] = vol.dims;
  require(vol.data.size() == nc * nz * ny * nx, ErrorCode::ShapeMismatch, "3-D data length does not match dims");
  require(nc >= 1 && nz >= 1 && ny >= 1 && nx >= 1, ErrorCode::ShapeMismatch, "3-D volume has an empty axis");

  std::vector<cdouble> buf(vol.data.size());
  auto load = [&] {
    std::transform(vol.data.begin(), vol.data.end(), buf.begin(),
                   [](cfloat v) { return cdouble(v.real(), v.imag()); });
  };
  auto idx = [&](std::size_t c, std::size_t z, std::size_t y, std::size_t x) {
    return ((c * nz + z) * ny + y) * nx + x;
  };
  auto put = [](cfloat& dst, cdouble v) {
    dst = cfloat(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  };

  // axial: inverse transform along z, slices indexed by z, 2-D k-space (ky, kx)
  load();
  for (std::size_t c = 0; c < nc; ++c)
    fft::fft1c(std::span(buf).subspan(c * nz * ny * nx), nz, ny * nx, ny * nx, 1, true);
  KSpaceVolume axial(vol.volume_id + "_axial", nz, nc, ny, nx);
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) put(axial.at(z, c, y, x), buf[idx(c, z, y, x)]);

  // coronal: along y, 2-D k-space (kz, kx)
  load();
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t z = 0; z < nz; ++z)
      fft::fft1c(std::span(buf).subspan(idx(c, z, 0, 0)), ny, nx, nx, 1, true);
  KSpaceVolume coronal(vol.volume_id + "_coronal", ny, nc, nz, nx);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t x = 0; x < nx; ++x) put(coronal.at(y, c, z, x), buf[idx(c, z, y, x)]);

  // sagittal: along x, 2-D k-space (kz, ky)
  load();
  fft::fft1c(buf, nx, nc * nz * ny, 1, nx, true);
  KSpaceVolume sagittal(vol.volume_id + "_sagittal", nx, nc, nz, ny);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y) put(sagittal.at(x, c, z, y), buf[idx(c, z, y, x)]);

  return {ViewVolume{View::Axial, std::move(axial)}, ViewVolume{View::Coronal, std::move(coronal)},
          ViewVolume{View::Sagittal, std::move(sagittal)}};
}

}  // namespace kcurate
