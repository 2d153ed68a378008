#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kcurate/error.hpp"

namespace kcurate {

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Dense row-major 2-D array.
template <class T>
struct Grid2 {
  std::size_t ny = 0;
  std::size_t nx = 0;
  std::vector<T> data;

  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{}) : ny(rows), nx(cols), data(rows * cols, fill) {}

  std::size_t size() const { return data.size(); }
  bool same_shape(const Grid2& o) const { return ny == o.ny && nx == o.nx; }

  T& operator()(std::size_t r, std::size_t c) { return data[r * nx + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * nx + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * nx, nx}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * nx, nx}; }

  bool operator==(const Grid2&) const = default;
};

using ComplexImage = Grid2<cdouble>;
using RealImage = Grid2<double>;
using BoolImage = Grid2<std::uint8_t>;

// Row-major [coil, ny, nx] stack of complex images.
struct CoilStack {
  std::size_t coils = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;
  std::vector<cdouble> data;

  CoilStack() = default;
  CoilStack(std::size_t c, std::size_t rows, std::size_t cols)
      : coils(c), ny(rows), nx(cols), data(c * rows * cols) {}

  std::size_t plane() const { return ny * nx; }
  std::span<cdouble> coil(std::size_t i) { return {data.data() + i * plane(), plane()}; }
  std::span<const cdouble> coil(std::size_t i) const { return {data.data() + i * plane(), plane()}; }

  cdouble& operator()(std::size_t c, std::size_t r, std::size_t x) { return data[(c * ny + r) * nx + x]; }
  const cdouble& operator()(std::size_t c, std::size_t r, std::size_t x) const {
    return data[(c * ny + r) * nx + x];
  }

  bool same_shape(const CoilStack& o) const { return coils == o.coils && ny == o.ny && nx == o.nx; }
};

// Coil sensitivities S_i, one complex plane per coil.
struct SensitivityMaps {
  CoilStack maps;

  std::size_t coils() const { return maps.coils; }
  std::size_t ny() const { return maps.ny; }
  std::size_t nx() const { return maps.nx; }

  // Per-pixel sum over coils of |S_i|^2.
  RealImage energy() const;
};

enum class Normalization { Raw, VolumeMax };

struct MagnitudeImage {
  RealImage pixels;
  Normalization tag = Normalization::Raw;
};

RealImage magnitude(const ComplexImage& img);
double max_value(const RealImage& img);

}  // namespace kcurate
