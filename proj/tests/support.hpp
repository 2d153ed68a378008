#pragma once

#include <atomic>
#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <doctest.h>

#include "kcurate/array.hpp"
#include "kcurate/embedding.hpp"
#include "kcurate/error.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kcurate_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Code of the kcurate::Error thrown by f; kcurate::ErrorCode::IoError with a
// failed check if nothing is thrown.
template <class F>
kcurate::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const kcurate::Error& e) {
    return e.code();
  }
  FAIL_CHECK("expected a kcurate::Error");
  return kcurate::ErrorCode::IoError;
}

inline kcurate::EmbeddingSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t d,
                                        const std::string& model = "m", std::size_t slices_per_volume = 4,
                                        std::size_t patches_per_slice = 2) {
  std::normal_distribution<float> nd;
  kcurate::EmbeddingSet s{model, d, std::vector<float>(n * d), {}};
  for (auto& v : s.matrix) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slice = i / patches_per_slice;
    s.refs.push_back({"v" + std::to_string(slice / slices_per_volume), slice % slices_per_volume,
                      (i % patches_per_slice) / 2, (i % patches_per_slice) % 2});
  }
  return s;
}

inline double rel_error(const kcurate::ComplexImage& a, const kcurate::ComplexImage& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data[i] - b.data[i]);
    den += std::norm(b.data[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace testing
