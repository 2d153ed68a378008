#include "kcurate/recon.hpp"

#include <algorithm>
#include <cmath>

#include "kcurate/fft.hpp"
#include "kcurate/parallel.hpp"
#include "kcurate/philox.hpp"
#include "kcurate/recon_detail.hpp"

namespace kcurate {

std::size_t UndersamplingMask::sampled() const {
  return static_cast<std::size_t>(std::count(lines.begin(), lines.end(), std::uint8_t{1}));
}

double center_fraction_for(double acceleration) {
  if (acceleration <= 4.0) return 0.08;
  if (acceleration >= 8.0) return 0.04;
  return 0.08 - 0.04 * (acceleration - 4.0) / 4.0;
}

UndersamplingMask make_mask(std::size_t num_lines, double acceleration, std::uint64_t seed) {
  require(num_lines >= 16, ErrorCode::InvalidArgument, "mask needs at least 16 lines");
  require(std::isfinite(acceleration) && acceleration >= 1.0, ErrorCode::InvalidArgument, "acceleration must be >= 1");
  UndersamplingMask m;
  m.acceleration = acceleration;
  m.seed = seed;
  m.center_fraction = center_fraction_for(acceleration);
  m.center_lines = static_cast<std::size_t>(std::lround(m.center_fraction * static_cast<double>(num_lines)));
  const auto budget = static_cast<std::size_t>(std::floor(static_cast<double>(num_lines) / acceleration));
  if (budget < m.center_lines)
    fail(ErrorCode::InvalidArgument, "line budget " + std::to_string(budget) + " smaller than center block " +
                                         std::to_string(m.center_lines));

  m.lines.assign(num_lines, 0);
  const std::size_t start = (num_lines - m.center_lines + 1) / 2;
  std::vector<std::size_t> outer;
  outer.reserve(num_lines - m.center_lines);
  for (std::size_t i = 0; i < num_lines; ++i) {
    if (i >= start && i < start + m.center_lines)
      m.lines[i] = 1;
    else
      outer.push_back(i);
  }

  const std::size_t remaining = budget - m.center_lines;
  if (remaining > 0) {
    const double stride = static_cast<double>(outer.size()) / static_cast<double>(remaining);
    CounterRng rng(seed, 0x6d61736bull);
    m.offset = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(std::floor(stride))));
    for (std::size_t j = 0; j < remaining; ++j) {
      const auto pos = static_cast<std::size_t>(std::floor(static_cast<double>(m.offset) + static_cast<double>(j) * stride));
      m.lines[outer[pos]] = 1;
    }
  }
  return m;
}

CoilStack apply_mask(const CoilStack& kspace, const UndersamplingMask& mask) {
  require(mask.lines.size() == kspace.nx, ErrorCode::ShapeMismatch, "mask length must equal kx");
  CoilStack out = kspace;
  for (std::size_t c = 0; c < out.coils; ++c)
    for (std::size_t y = 0; y < out.ny; ++y)
      for (std::size_t x = 0; x < out.nx; ++x)
        if (!mask.lines[x]) out(c, y, x) = 0.0;
  return out;
}

ComplexImage mvue(const CoilStack& kspace, const SensitivityMaps& maps) {
  require(kspace.same_shape(maps.maps), ErrorCode::ShapeMismatch, "k-space and sensitivity maps differ in shape");
  ComplexImage num(kspace.ny, kspace.nx);
  RealImage den(kspace.ny, kspace.nx, 0.0);
  std::vector<cdouble> coil(kspace.plane());
  for (std::size_t i = 0; i < kspace.coils; ++i) {
    auto k = kspace.coil(i);
    std::copy(k.begin(), k.end(), coil.begin());
    fft::ifft2c(coil, kspace.ny, kspace.nx);
    auto s = maps.maps.coil(i);
    for (std::size_t p = 0; p < coil.size(); ++p) {
      num.data[p] += std::conj(s[p]) * coil[p];
      den.data[p] += std::norm(s[p]);
    }
  }
  for (std::size_t p = 0; p < num.size(); ++p) num.data[p] = den.data[p] < 1e-12 ? cdouble{} : num.data[p] / den.data[p];
  return num;
}

MagnitudeImage rss(const CoilStack& kspace) {
  MagnitudeImage out{RealImage(kspace.ny, kspace.nx, 0.0), Normalization::Raw};
  std::vector<cdouble> coil(kspace.plane());
  for (std::size_t i = 0; i < kspace.coils; ++i) {
    auto k = kspace.coil(i);
    std::copy(k.begin(), k.end(), coil.begin());
    fft::ifft2c(coil, kspace.ny, kspace.nx);
    for (std::size_t p = 0; p < coil.size(); ++p) out.pixels.data[p] += std::norm(coil[p]);
  }
  for (auto& v : out.pixels.data) v = std::sqrt(v);
  return out;
}

MagnitudeImage zero_filled(const CoilStack& kspace, const UndersamplingMask& mask) {
  return rss(apply_mask(kspace, mask));
}

namespace {

std::vector<double> taper(std::size_t n, double center_fraction) {
  const double half = std::max(1.0, std::round(center_fraction * static_cast<double>(n) / 2.0));
  const double sigma = half / 2.0;
  std::vector<double> w(n, 0.0);
  const double mid = static_cast<double>(n / 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(k) - mid;
    if (std::abs(d) <= half) w[k] = std::exp(-0.5 * (d / sigma) * (d / sigma));
  }
  return w;
}

}  // namespace

SensitivityMaps estimate_maps_lowfreq(const CoilStack& kspace, double center_fraction, const MapEstimateOptions& opts) {
  require(center_fraction > 0.0 && center_fraction <= 0.25, ErrorCode::InvalidArgument,
          "center_fraction must lie in (0, 0.25]");
  const auto wy = taper(kspace.ny, center_fraction);
  const auto wx = taper(kspace.nx, center_fraction);
  SensitivityMaps out{CoilStack(kspace.coils, kspace.ny, kspace.nx)};
  RealImage norm(kspace.ny, kspace.nx, 0.0);
  for (std::size_t i = 0; i < kspace.coils; ++i) {
    auto plane = out.maps.coil(i);
    for (std::size_t y = 0; y < kspace.ny; ++y)
      for (std::size_t x = 0; x < kspace.nx; ++x) plane[y * kspace.nx + x] = kspace(i, y, x) * (wy[y] * wx[x]);
    fft::ifft2c(plane, kspace.ny, kspace.nx);
    for (std::size_t p = 0; p < plane.size(); ++p) norm.data[p] += std::norm(plane[p]);
  }
  for (auto& v : norm.data) v = std::sqrt(v);
  BoolImage keep(kspace.ny, kspace.nx, 1);
  if (opts.background_fraction > 0.0) {
    const RealImage full = rss(kspace).pixels;
    const double cut = opts.background_fraction * max_value(full);
    for (std::size_t p = 0; p < full.size(); ++p) keep.data[p] = full.data[p] > cut;
  }
  for (std::size_t i = 0; i < kspace.coils; ++i) {
    auto plane = out.maps.coil(i);
    for (std::size_t p = 0; p < plane.size(); ++p)
      plane[p] = keep.data[p] && norm.data[p] > 1e-12 ? plane[p] / norm.data[p] : 0.0;
  }
  return out;
}

BoolImage foreground_mask(const SensitivityMaps& maps, double tau_fraction) {
  const RealImage e = maps.energy();
  const double peak = max_value(e);
  BoolImage mask(e.ny, e.nx, 0);
  if (!(peak > 0.0)) return mask;
  const double tau = tau_fraction * peak;
  for (std::size_t p = 0; p < e.size(); ++p) mask.data[p] = e.data[p] > tau ? 1 : 0;

  const auto ny = static_cast<std::ptrdiff_t>(e.ny), nx = static_cast<std::ptrdiff_t>(e.nx);
  // Closing: dilation treats outside as background, erosion treats it as foreground,
  // so the result always contains the input.
  BoolImage dilated(e.ny, e.nx, 0);
  for (std::ptrdiff_t r = 0; r < ny; ++r)
    for (std::ptrdiff_t c = 0; c < nx; ++c) {
      std::uint8_t v = 0;
      for (std::ptrdiff_t dr = -1; dr <= 1 && !v; ++dr)
        for (std::ptrdiff_t dc = -1; dc <= 1 && !v; ++dc) {
          const auto rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < ny && cc >= 0 && cc < nx && mask(rr, cc)) v = 1;
        }
      dilated(r, c) = v;
    }
  BoolImage closed(e.ny, e.nx, 0);
  for (std::ptrdiff_t r = 0; r < ny; ++r)
    for (std::ptrdiff_t c = 0; c < nx; ++c) {
      std::uint8_t v = 1;
      for (std::ptrdiff_t dr = -1; dr <= 1 && v; ++dr)
        for (std::ptrdiff_t dc = -1; dc <= 1 && v; ++dc) {
          const auto rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < ny && cc >= 0 && cc < nx && !dilated(rr, cc)) v = 0;
        }
      closed(r, c) = v;
    }
  return closed;
}

std::string to_string(ReconMethod m) {
  switch (m) {
    case ReconMethod::Mvue: return "mvue";
    case ReconMethod::Rss: return "rss";
    case ReconMethod::ZeroFilled: return "zerofilled";
  }
  return "mvue";
}

ReconMethod recon_method_from_string(const std::string& s) {
  if (s == "mvue") return ReconMethod::Mvue;
  if (s == "rss") return ReconMethod::Rss;
  if (s == "zerofilled") return ReconMethod::ZeroFilled;
  fail(ErrorCode::InvalidArgument, "unknown reconstruction method '" + s + "'");
}

namespace detail {

void reconstruct_slice(const KSpaceVolume& vol, std::size_t s, const ReconOptions& opts,
                       const UndersamplingMask* mask, VolumeRecon& out) {
  CoilStack k = vol.slice(s);
  if (mask) k = apply_mask(k, *mask);
  auto to_complex = [](const MagnitudeImage& m) {
    ComplexImage img(m.pixels.ny, m.pixels.nx);
    std::copy(m.pixels.data.begin(), m.pixels.data.end(), img.data.begin());
    return img;
  };
  switch (opts.method) {
    case ReconMethod::Mvue:
      out.maps[s] = estimate_maps_lowfreq(k, opts.map_center_fraction, opts.maps);
      out.images[s] = mvue(k, out.maps[s]);
      break;
    case ReconMethod::Rss:
    case ReconMethod::ZeroFilled:
      out.images[s] = to_complex(rss(k));
      break;
  }
}

VolumeRecon prepare(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask) {
  vol.validate();
  require(opts.map_center_fraction > 0.0 && opts.map_center_fraction <= 0.25, ErrorCode::InvalidArgument,
          "map center_fraction must lie in (0, 0.25]");
  if (opts.method == ReconMethod::ZeroFilled)
    require(mask != nullptr, ErrorCode::InvalidArgument, "zero-filled reconstruction needs a mask");
  if (mask) require(mask->lines.size() == vol.kx(), ErrorCode::ShapeMismatch, "mask length must equal kx");
  VolumeRecon out;
  out.images.resize(vol.slices());
  if (opts.method == ReconMethod::Mvue) out.maps.resize(vol.slices());
  return out;
}

}  // namespace detail

VolumeRecon reconstruct_volume(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask) {
  VolumeRecon out = detail::prepare(vol, opts, mask);
  parallel_for(static_cast<std::ptrdiff_t>(vol.slices()),
               [&](std::ptrdiff_t s) { detail::reconstruct_slice(vol, static_cast<std::size_t>(s), opts, mask, out); });
  return out;
}

}  // namespace kcurate
