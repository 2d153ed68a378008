#pragma once

#include <cstddef>
#include <span>

#include "kcurate/array.hpp"

namespace kcurate::fft {

// Centered, orthonormal transforms: DC sits at index n/2 of each transformed
// axis in k-space and at n/2 in image space (fftshift/ifftshift convention).
// All routines are safe to call concurrently.

void fft2c(std::span<cdouble> plane, std::size_t ny, std::size_t nx);
void ifft2c(std::span<cdouble> plane, std::size_t ny, std::size_t nx);

ComplexImage fft2c(const ComplexImage& img);
ComplexImage ifft2c(const ComplexImage& k);

// 1-D centered orthonormal transform of `count` lines of length n, element j of
// line l at data[l * line_stride + j * elem_stride].
void fft1c(std::span<cdouble> data, std::size_t n, std::size_t count, std::size_t elem_stride,
           std::size_t line_stride, bool inverse);

}  // namespace kcurate::fft
