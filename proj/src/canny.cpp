#include <cmath>
#include <vector>

#include "kcurate/heuristic.hpp"

namespace kcurate {
namespace {

// scipy "reflect": d c b a | a b c d | d c b a
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma, std::ptrdiff_t& radius) {
  radius = static_cast<std::ptrdiff_t>(4.0 * sigma + 0.5);
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 / (sigma * sigma) * static_cast<double>(i * i));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable correlation with reflect borders; axis 0 runs along rows.
// Symmetric and antisymmetric kernels pair the taps the way scipy.ndimage does,
// so ties in flat or periodic images resolve identically.
RealImage correlate1d(const RealImage& in, const std::vector<double>& w, int axis) {
  const auto ny = static_cast<std::ptrdiff_t>(in.ny), nx = static_cast<std::ptrdiff_t>(in.nx);
  const auto radius = static_cast<std::ptrdiff_t>(w.size() / 2);
  const auto tap = [&](std::ptrdiff_t j) { return w[static_cast<std::size_t>(j + radius)]; };
  bool symmetric = true, antisymmetric = true;
  for (std::ptrdiff_t j = 1; j <= radius; ++j) {
    symmetric &= tap(j) == tap(-j);
    antisymmetric &= tap(j) == -tap(-j);
  }
  RealImage out(in.ny, in.nx, 0.0);
  for (std::ptrdiff_t r = 0; r < ny; ++r)
    for (std::ptrdiff_t c = 0; c < nx; ++c) {
      const auto at = [&](std::ptrdiff_t j) { return axis == 0 ? in(reflect(r + j, ny), c) : in(r, reflect(c + j, nx)); };
      double acc = at(0) * tap(0);
      if (symmetric)
        for (std::ptrdiff_t j = radius; j >= 1; --j) acc += (at(-j) + at(j)) * tap(j);
      else if (antisymmetric)
        for (std::ptrdiff_t j = radius; j >= 1; --j) acc += (at(-j) - at(j)) * tap(-j);
      else
        for (std::ptrdiff_t j = -radius; j <= radius; ++j)
          if (j != 0) acc += at(j) * tap(j);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace

BoolImage canny_edges(const MagnitudeImage& image, const CannyParams& params) {
  require(params.sigma > 0.0 && params.low >= 0.0 && params.high >= params.low, ErrorCode::InvalidArgument,
          "canny needs sigma > 0 and 0 <= low <= high");
  std::ptrdiff_t radius = 0;
  const auto kernel = gaussian_kernel(params.sigma, radius);
  const auto ksize = static_cast<std::size_t>(2 * radius + 1);
  if (image.pixels.ny < ksize || image.pixels.nx < ksize)
    fail(ErrorCode::ImageTooSmall, std::to_string(image.pixels.ny) + "x" + std::to_string(image.pixels.nx) +
                                       " image is smaller than the " + std::to_string(ksize) + "-tap blur kernel");

  const RealImage smoothed = correlate1d(correlate1d(image.pixels, kernel, 0), kernel, 1);
  const std::vector<double> diff{-1.0, 0.0, 1.0}, smooth{1.0, 2.0, 1.0};
  const RealImage isobel = correlate1d(correlate1d(smoothed, diff, 0), smooth, 1);
  const RealImage jsobel = correlate1d(correlate1d(smoothed, diff, 1), smooth, 0);

  const std::size_t ny = smoothed.ny, nx = smoothed.nx;
  RealImage mag(ny, nx, 0.0);
  for (std::size_t p = 0; p < mag.size(); ++p) mag.data[p] = std::sqrt(isobel.data[p] * isobel.data[p] + jsobel.data[p] * jsobel.data[p]);

  // Non-maximum suppression, interpolating between the two neighbours that
  // straddle the gradient direction.
  RealImage maxima(ny, nx, 0.0);
  for (std::size_t x = 1; x + 1 < ny; ++x)
    for (std::size_t y = 1; y + 1 < nx; ++y) {
      const double m = mag(x, y);
      if (m < params.low) continue;
      const double is = isobel(x, y), js = jsobel(x, y);
      const double ais = std::abs(is), ajs = std::abs(js);
      const bool down = is <= 0, up = is >= 0, left = js <= 0, right = js >= 0;
      const bool cond1 = (up && right) || (down && left);
      const bool cond2 = (down && right) || (up && left);
      if (!cond1 && !cond2) continue;
      double w, n11, n12, n21, n22;
      auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
      if (cond1) {
        if (ais >= ajs) {
          w = ratio(ajs, ais);
          n11 = mag(x + 1, y), n12 = mag(x + 1, y + 1), n21 = mag(x - 1, y), n22 = mag(x - 1, y - 1);
        } else {
          w = ratio(ais, ajs);
          n11 = mag(x, y + 1), n12 = mag(x + 1, y + 1), n21 = mag(x, y - 1), n22 = mag(x - 1, y - 1);
        }
      } else {
        if (ais <= ajs) {
          w = ratio(ais, ajs);
          n11 = mag(x, y + 1), n12 = mag(x - 1, y + 1), n21 = mag(x, y - 1), n22 = mag(x + 1, y - 1);
        } else {
          w = ratio(ajs, ais);
          n11 = mag(x - 1, y), n12 = mag(x - 1, y + 1), n21 = mag(x + 1, y), n22 = mag(x + 1, y - 1);
        }
      }
      if (w * n12 + (1.0 - w) * n11 <= m && w * n22 + (1.0 - w) * n21 <= m) maxima(x, y) = m;
    }

  // Hysteresis: keep 8-connected components of local maxima that touch a
  // pixel at or above the high threshold.
  BoolImage edges(ny, nx, 0);
  std::vector<std::size_t> stack;
  for (std::size_t p = 0; p < maxima.size(); ++p) {
    if (maxima.data[p] <= 0.0 || maxima.data[p] < params.high || edges.data[p]) continue;
    edges.data[p] = 1;
    stack.push_back(p);
    while (!stack.empty()) {
      const std::size_t q = stack.back();
      stack.pop_back();
      const auto qr = static_cast<std::ptrdiff_t>(q / nx), qc = static_cast<std::ptrdiff_t>(q % nx);
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const auto rr = qr + dr, cc = qc + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(ny) || cc >= static_cast<std::ptrdiff_t>(nx)) continue;
          const std::size_t n = static_cast<std::size_t>(rr) * nx + static_cast<std::size_t>(cc);
          if (!edges.data[n] && maxima.data[n] > 0.0) {
            edges.data[n] = 1;
            stack.push_back(n);
          }
        }
    }
  }
  return edges;
}

double edge_density(const MagnitudeImage& image, const CannyParams& params) {
  const BoolImage e = canny_edges(image, params);
  std::size_t count = 0;
  for (auto v : e.data) count += v;
  return static_cast<double>(count) / static_cast<double>(e.size());
}

}  // namespace kcurate
