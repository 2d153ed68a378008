#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "kcurate/hdf5_io.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/phantom.hpp"
#include "kcurate/reference.hpp"
#include "support.hpp"

using namespace kcurate;
using testing::code_of;

namespace {

MagnitudeImage image(std::size_t ny, std::size_t nx, auto&& f) {
  MagnitudeImage m{RealImage(ny, nx), Normalization::VolumeMax};
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) m.pixels(y, x) = f(y, x);
  return m;
}

std::size_t count(const BoolImage& b) { return static_cast<std::size_t>(std::count(b.data.begin(), b.data.end(), 1)); }

MagnitudeImage phantom_slice(std::uint64_t seed, std::size_t n = 64) {
  PhantomSpec spec;
  spec.ny = spec.nx = n;
  spec.coil_count = 1;
  spec.ellipses = random_ellipses(seed, static_cast<int>(seed % 2));
  return {magnitude(make_phantom(spec).image), Normalization::Raw};
}

}  // namespace

TEST_CASE("energy ratio") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<MagnitudeImage> vol;
  for (int s = 0; s < 7; ++s) vol.push_back(image(9, 11, [&](auto, auto) { return u(rng); }));
  const auto r = energy_ratio(vol);
  // brute-force max scan
  double vmax = 0.0;
  std::vector<double> smax;
  for (const auto& s : vol) {
    double m = 0.0;
    for (std::size_t y = 0; y < 9; ++y)
      for (std::size_t x = 0; x < 11; ++x) m = std::max(m, s.pixels(y, x));
    smax.push_back(m);
    vmax = std::max(vmax, m);
  }
  std::size_t ones = 0;
  for (std::size_t s = 0; s < vol.size(); ++s) {
    CHECK(r[s] == smax[s] / vmax);
    ones += r[s] == 1.0;
  }
  CHECK(ones == 1);

  auto scaled = vol;
  for (auto& s : scaled)
    for (auto& v : s.pixels.data) v *= 8.0;
  CHECK(energy_ratio(scaled) == r);

  std::vector<MagnitudeImage> dark{image(4, 4, [](auto, auto) { return 1.0; }), image(4, 4, [](auto, auto) { return 0.05; })};
  CHECK(energy_ratio(dark)[1] == doctest::Approx(0.05));
  CHECK(heuristic_select({{"v", 1, 0.05, 0.5}}, {}).entries.empty());

  std::vector<MagnitudeImage> zero{image(4, 4, [](auto, auto) { return 0.0; })};
  CHECK(code_of([&] { energy_ratio(zero); }) == ErrorCode::UndefinedRatio);
  CHECK(code_of([] { energy_ratio({}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("canny on a constant image finds nothing") {
  for (double c : {0.0, 0.3, 1.0}) {
    const auto img = image(40, 48, [&](auto, auto) { return c; });
    CHECK(count(canny_edges(img)) == 0);
    CHECK(edge_density(img) == 0.0);
  }
}

TEST_CASE("canny on a unit step draws one thin vertical line") {
  const std::size_t ny = 96, nx = 80;
  const auto e = canny_edges(image(ny, nx, [](auto, std::size_t x) { return x >= 40 ? 1.0 : 0.0; }));
  const std::size_t n = count(e);
  CHECK(n >= static_cast<std::size_t>(0.8 * ny));
  CHECK(n <= 3 * ny);
  // geometry: every edge pixel sits in one column next to the step, and every
  // interior row has exactly one
  std::vector<std::size_t> per_row(ny, 0);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x)
      if (e(y, x)) {
        CHECK((x == 39 || x == 40));
        ++per_row[y];
      }
  for (std::size_t y = 1; y + 1 < ny; ++y) CHECK(per_row[y] == 1);
  CHECK(per_row[0] == 0);
  CHECK(per_row[ny - 1] == 0);
}

TEST_CASE("a faint step stays below the low threshold") {
  const double h = 0.005, sigma = 2.0;
  // peak Sobel response of a blurred step: 2 (central difference) * 4 (smoothing) * h * gaussian peak
  const double bound = 8.0 * h / (sigma * std::sqrt(2.0 * std::numbers::pi));
  CHECK(bound < CannyParams{}.low);
  const auto e = canny_edges(image(64, 64, [&](auto, std::size_t x) { return x >= 32 ? h : 0.0; }));
  CHECK(count(e) == 0);
}

TEST_CASE("fine checkerboard is dense in edges") {
  const auto img = image(64, 64, [](std::size_t y, std::size_t x) { return ((x / 4 + y / 4) % 2) ? 1.0 : 0.0; });
  const auto e = canny_edges(img);
  const double density = edge_density(img);
  CHECK(density == static_cast<double>(count(e)) / 4096.0);
  CHECK(density > HeuristicThresholds{}.edge);
}

TEST_CASE("edge density ignores a constant offset") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto img = phantom_slice(seed);
    auto shifted = img;
    for (auto& v : shifted.pixels.data) v += 0.25;
    CHECK(canny_edges(shifted) == canny_edges(img));
  }
}

TEST_CASE("images smaller than the blur kernel are rejected") {
  const auto ok = image(17, 17, [](auto, auto) { return 0.0; });
  CHECK(edge_density(ok) == 0.0);
  CHECK(code_of([] { canny_edges(image(16, 64, [](auto, auto) { return 0.0; })); }) == ErrorCode::ImageTooSmall);
  CHECK(code_of([] { edge_density(image(64, 12, [](auto, auto) { return 0.0; })); }) == ErrorCode::ImageTooSmall);
}

TEST_CASE("thresholds are strict") {
  const HeuristicThresholds th;
  const std::vector<SliceScore> scores{{"a", 0, 0.11, 0.5}, {"a", 1, 0.5, 0.017}, {"a", 2, 0.110001, 0.017001}};
  const auto r = heuristic_select(scores, th);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].slice_index == 2);
  CHECK(r.entries[0].weight == 1.0);
  CHECK(r.params["mode"] == "heuristic");
}

TEST_CASE("filter composition and monotonicity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<SliceScore> scores;
  for (std::size_t i = 0; i < 200; ++i) scores.push_back({"v" + std::to_string(i % 7), i, u(rng), u(rng) / 4});
  auto keys = [](const CurationResult& r) { return r.entries; };
  const auto both = keys(heuristic_select(scores, {0.11, 0.017}));
  const auto energy_only = keys(heuristic_select(scores, {0.11, -1.0}));
  const auto edge_only = keys(heuristic_select(scores, {-1.0, 0.017}));
  std::vector<CurationEntry> inter;
  std::set_intersection(energy_only.begin(), energy_only.end(), edge_only.begin(), edge_only.end(),
                        std::back_inserter(inter), [](const CurationEntry& a, const CurationEntry& b) {
                          return std::tie(a.volume_id, a.slice_index) < std::tie(b.volume_id, b.slice_index);
                        });
  CHECK(inter == both);
  std::size_t prev = scores.size() + 1;
  for (double t = 0.0; t <= 0.2; t += 0.01) {
    const std::size_t n = heuristic_select(scores, {t, 0.017}).entries.size();
    CHECK(n <= prev);
    prev = n;
  }
  std::vector<SliceScore> positive = scores;
  for (auto& s : positive) s.edge_density += 1e-3, s.energy_ratio += 1e-3;
  CHECK(heuristic_select(positive, {0.0, 0.0}).entries.size() == positive.size());
}

TEST_CASE("dark and flat slices are removed, structured ones kept") {
  std::vector<VolumeMagnitudes> volumes;
  std::set<std::pair<std::string, std::size_t>> bad;
  for (std::uint64_t v = 0; v < 4; ++v) {
    VolumeMagnitudes vol{"vol" + std::to_string(v), {}};
    for (std::size_t s = 0; s < 8; ++s) {
      auto slice = phantom_slice(v * 100 + s);
      const std::string id = vol.volume_id;
      if (s == 2 + v % 3) {
        for (auto& p : slice.pixels.data) p *= 0.05;
        bad.insert({id, s});
      } else if (s == 6) {
        slice = image(64, 64, [](auto, auto) { return 0.4; });
        bad.insert({id, s});
      }
      vol.slices.push_back(slice);
    }
    volumes.push_back(vol);
  }
  const auto scores = score_slices(volumes);
  REQUIRE(scores.size() == 32);
  for (const auto& s : scores) {
    CHECK(s.energy_ratio >= 0.0);
    CHECK(s.energy_ratio <= 1.0);
    CHECK(s.edge_density >= 0.0);
    CHECK(s.edge_density <= 1.0);
  }
  const auto kept = heuristic_select(scores, {});
  CHECK(kept.entries.size() == 32 - bad.size());
  for (const auto& e : kept.entries) CHECK(bad.count({e.volume_id, e.slice_index}) == 0);
}

TEST_CASE("parallel slice scoring matches the serial reference") {
  std::vector<VolumeMagnitudes> volumes;
  for (std::uint64_t v = 0; v < 3; ++v) {
    VolumeMagnitudes vol{"p" + std::to_string(v), {}};
    for (std::size_t s = 0; s < 5; ++s) vol.slices.push_back(phantom_slice(v * 10 + s, 48));
    volumes.push_back(vol);
  }
  const auto a = score_slices(volumes);
  const auto b = serial::score_slices(volumes);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].volume_id == b[i].volume_id);
    CHECK(a[i].slice_index == b[i].slice_index);
    CHECK(a[i].energy_ratio == b[i].energy_ratio);
    CHECK(a[i].edge_density == b[i].edge_density);
  }
}

TEST_CASE("manifest-driven filter reads reconstructions") {
  testing::TempDir dir("heur");
  DatasetManifest manifest;
  for (const std::string id : {"a", "b"}) {
    h5::ReconVolume rec;
    rec.volume_id = id;
    rec.method = "mvue";
    for (std::size_t s = 0; s < 3; ++s) {
      PhantomSpec spec;
      spec.ny = spec.nx = 48;
      spec.coil_count = 1;
      spec.ellipses = random_ellipses(s + (id == "b" ? 10 : 0));
      auto img = make_phantom(spec).image;
      if (id == "a" && s == 1)
        for (auto& v : img.data) v *= 0.01;
      rec.images.push_back(img);
      manifest.records.push_back({id, s, "src", "brain", View::Axial, "pd", 3.0, 1});
    }
    h5::save_recon(dir / (id + ".h5"), rec);
  }
  std::vector<SliceScore> scores;
  const auto r = heuristic_filter(manifest, dir.path(), {}, &scores);
  CHECK(scores.size() == 6);
  CHECK(r.entries.size() == 5);
  CHECK(std::none_of(r.entries.begin(), r.entries.end(), [](const CurationEntry& e) { return e.volume_id == "a" && e.slice_index == 1; }));

  // only listed slices are scored
  DatasetManifest partial = manifest;
  partial.records.pop_back();
  CHECK(heuristic_filter(partial, dir.path(), {}, &scores).entries.size() == 4);
  CHECK(scores.size() == 5);

  manifest.records.push_back({"c", 0, "src", "brain", View::Axial, "pd", 3.0, 1});
  CHECK(code_of([&] { heuristic_filter(manifest, dir.path(), {}); }) == ErrorCode::MissingArtifact);
  DatasetManifest beyond;
  beyond.records.push_back({"a", 7, "src", "brain", View::Axial, "pd", 3.0, 1});
  CHECK(code_of([&] { heuristic_filter(beyond, dir.path(), {}); }) == ErrorCode::MissingArtifact);
}
