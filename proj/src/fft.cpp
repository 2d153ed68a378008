#include "kcurate/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace kcurate::fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t ny, std::size_t nx, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(ny, nx, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cdouble> scratch(ny * nx);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = ny == 1 ? fftw_plan_dft_1d(static_cast<int>(nx), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                             : fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf, buf, sign,
                                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void execute(std::vector<cdouble>& buf, std::size_t ny, std::size_t nx, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(cache().get(ny, nx, sign), p, p);
}

void transform2(std::span<cdouble> plane, std::size_t ny, std::size_t nx, int sign) {
  require(plane.size() == ny * nx, ErrorCode::ShapeMismatch, "fft2c plane size");
  std::vector<cdouble> buf(ny * nx);
  // ifftshift on input
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t sr = (r + ny / 2) % ny;
    for (std::size_t c = 0; c < nx; ++c) buf[r * nx + c] = plane[sr * nx + (c + nx / 2) % nx];
  }
  execute(buf, ny, nx, sign);
  const double scale = 1.0 / std::sqrt(static_cast<double>(ny * nx));
  // fftshift on output
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t dr = (r + ny / 2) % ny;
    for (std::size_t c = 0; c < nx; ++c) plane[dr * nx + (c + nx / 2) % nx] = buf[r * nx + c] * scale;
  }
}

}  // namespace

void fft2c(std::span<cdouble> plane, std::size_t ny, std::size_t nx) { transform2(plane, ny, nx, FFTW_FORWARD); }
void ifft2c(std::span<cdouble> plane, std::size_t ny, std::size_t nx) { transform2(plane, ny, nx, FFTW_BACKWARD); }

ComplexImage fft2c(const ComplexImage& img) {
  ComplexImage out = img;
  fft2c(out.data, out.ny, out.nx);
  return out;
}

ComplexImage ifft2c(const ComplexImage& k) {
  ComplexImage out = k;
  ifft2c(out.data, out.ny, out.nx);
  return out;
}

void fft1c(std::span<cdouble> data, std::size_t n, std::size_t count, std::size_t elem_stride,
           std::size_t line_stride, bool inverse) {
  const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<cdouble> buf(n);
  for (std::size_t l = 0; l < count; ++l) {
    cdouble* line = data.data() + l * line_stride;
    for (std::size_t j = 0; j < n; ++j) buf[j] = line[((j + n / 2) % n) * elem_stride];
    execute(buf, 1, n, sign);
    for (std::size_t j = 0; j < n; ++j) line[((j + n / 2) % n) * elem_stride] = buf[j] * scale;
  }
}

}  // namespace kcurate::fft
