#include "kcurate/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kcurate/fft.hpp"
#include "kcurate/philox.hpp"

namespace kcurate {

void PhantomSpec::validate() const {
  require(ny >= 16 && nx >= 16, ErrorCode::InvalidArgument, "phantom grid must be at least 16x16");
  require(coil_count >= 1, ErrorCode::InvalidArgument, "phantom needs at least one coil");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  for (const auto& e : ellipses)
    require(e.intensity >= 0.0 && e.intensity <= 1.0, ErrorCode::InvalidArgument, "ellipse intensity outside [0, 1]");
}

namespace {

double coord(std::size_t i, std::size_t n) {
  const double half = static_cast<double>(n / 2);
  return (static_cast<double>(i) - half) / half;
}

SensitivityMaps coil_maps(std::size_t coils, std::size_t ny, std::size_t nx) {
  SensitivityMaps m{CoilStack(coils, ny, nx)};
  constexpr double width = 0.8;
  for (std::size_t r = 0; r < ny; ++r) {
    const double y = coord(r, ny);
    for (std::size_t c = 0; c < nx; ++c) {
      const double x = coord(c, nx);
      double total = 0.0;
      for (std::size_t i = 0; i < coils; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(coils);
        const double dx = x - std::cos(theta), dy = y - std::sin(theta);
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
        const double phase = 0.3 * std::numbers::pi * (x * std::cos(theta) + y * std::sin(theta)) + theta;
        m.maps(i, r, c) = std::polar(g, phase);
        total += g * g;
      }
      const double inv = 1.0 / std::sqrt(total);
      for (std::size_t i = 0; i < coils; ++i) m.maps(i, r, c) *= inv;
    }
  }
  return m;
}

}  // namespace

Phantom make_phantom(const PhantomSpec& spec) {
  spec.validate();
  Phantom p{ComplexImage(spec.ny, spec.nx), coil_maps(spec.coil_count, spec.ny, spec.nx)};
  for (std::size_t r = 0; r < spec.ny; ++r) {
    const double y = coord(r, spec.ny);
    for (std::size_t c = 0; c < spec.nx; ++c) {
      const double x = coord(c, spec.nx);
      double v = 0.0;
      for (const auto& e : spec.ellipses) {
        const double ca = std::cos(e.angle), sa = std::sin(e.angle);
        const double u = ((x - e.cx) * ca + (y - e.cy) * sa) / e.ax;
        const double w = (-(x - e.cx) * sa + (y - e.cy) * ca) / e.ay;
        if (u * u + w * w <= 1.0) v = e.intensity;
      }
      p.image(r, c) = v;
    }
  }
  return p;
}

CoilStack simulate_kspace(const ComplexImage& image, const SensitivityMaps& maps, double noise_sigma,
                          std::uint64_t seed) {
  require(image.ny == maps.ny() && image.nx == maps.nx(), ErrorCode::ShapeMismatch,
          "image and sensitivity maps differ in shape");
  require(noise_sigma >= 0.0, ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  CoilStack k(maps.coils(), image.ny, image.nx);
  const double component_sigma = noise_sigma / std::numbers::sqrt2;
  for (std::size_t i = 0; i < maps.coils(); ++i) {
    auto plane = k.coil(i);
    auto s = maps.maps.coil(i);
    for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = s[p] * image.data[p];
    fft::fft2c(plane, image.ny, image.nx);
    if (noise_sigma > 0.0) {
      CounterRng rng(seed, i);
      for (auto& v : plane) {
        const double re = rng.normal(), im = rng.normal();
        v += cdouble(component_sigma * re, component_sigma * im);
      }
    }
  }
  return k;
}

std::vector<Ellipse> random_ellipses(std::uint64_t seed, int family) {
  CounterRng rng(seed, 0x9e11a5e5ull + static_cast<std::uint64_t>(family));
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  std::vector<Ellipse> out;
  if (family % 2 == 0) {
    // round, brain-like: bright rim, darker interior, a few lesions
    const double ax = uni(0.7, 0.85), ay = uni(0.75, 0.9);
    out.push_back({0.0, 0.0, ax, ay, uni(-0.2, 0.2), uni(0.9, 1.0)});
    out.push_back({0.0, 0.0, ax * 0.88, ay * 0.88, out.back().angle, uni(0.55, 0.7)});
    const int n = 3 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i)
      out.push_back({uni(-0.4, 0.4), uni(-0.45, 0.45), uni(0.06, 0.22), uni(0.06, 0.3),
                     uni(0.0, std::numbers::pi), uni(0.2, 0.95)});
  } else {
    // elongated, knee-like: two long bones and stripes of tissue
    const double tilt = uni(-0.3, 0.3);
    out.push_back({0.0, 0.0, uni(0.45, 0.6), uni(0.85, 0.95), tilt, uni(0.6, 0.75)});
    out.push_back({uni(-0.15, -0.05), -0.45, uni(0.25, 0.35), uni(0.3, 0.4), tilt, uni(0.9, 1.0)});
    out.push_back({uni(0.05, 0.15), 0.45, uni(0.25, 0.35), uni(0.3, 0.4), tilt, uni(0.9, 1.0)});
    const int n = 4 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i)
      out.push_back({uni(-0.35, 0.35), uni(-0.7, 0.7), uni(0.03, 0.08), uni(0.1, 0.3), tilt, uni(0.1, 0.5)});
  }
  return out;
}

KSpaceVolume make_phantom_volume(const std::string& volume_id, std::size_t slices, std::size_t size,
                                 std::size_t coils, double noise_sigma, std::uint64_t seed, int family) {
  const auto base = random_ellipses(seed, family);
  KSpaceVolume vol(volume_id, slices, coils, size, size);
  for (std::size_t s = 0; s < slices; ++s) {
    const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(slices);
    const double scale = 0.75 + 0.25 * std::sin(std::numbers::pi * t);
    PhantomSpec spec{size, size, base, coils, noise_sigma, seed ^ (0x51ull * (s + 1))};
    for (auto& e : spec.ellipses) {
      e.ax *= scale;
      e.ay *= scale;
      e.cx *= scale;
      e.cy = e.cy * scale + 0.12 * (t - 0.5);
      e.angle += 0.4 * (t - 0.5);
    }
    const Phantom p = make_phantom(spec);
    vol.set_slice(s, simulate_kspace(p.image, p.maps, noise_sigma, spec.seed));
  }
  return vol;
}

}  // namespace kcurate
