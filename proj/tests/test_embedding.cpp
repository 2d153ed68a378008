#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "kcurate/embedding.hpp"
#include "kcurate/reference.hpp"
#include "kcurate/toy_embedder.hpp"
#include "support.hpp"

using namespace kcurate;
using testing::code_of;

namespace {

MagnitudeImage ramp(std::size_t ny, std::size_t nx) {
  MagnitudeImage m{RealImage(ny, nx), Normalization::VolumeMax};
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) m.pixels(y, x) = static_cast<double>(y * nx + x) / static_cast<double>(ny * nx);
  return m;
}

// Rows whose pairwise cosines are the Gram matrix G.
EmbeddingSet from_gram(const Eigen::MatrixXd& g, const std::vector<PatchRef>& refs) {
  const Eigen::MatrixXd l = g.llt().matrixL();
  EmbeddingSet s{"m", static_cast<std::size_t>(g.rows()), {}, refs};
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    for (Eigen::Index j = 0; j < l.cols(); ++j) s.matrix.push_back(static_cast<float>(l(i, j)));
  return s;
}

std::vector<PatchRef> refs_of(const EmbeddingSet& s) { return s.refs; }

// Greedy dedup traced directly from the rule: visit refs in order per volume,
// compare with everything kept so far in that volume.
std::vector<PatchRef> dedup_oracle(const EmbeddingSet& s, double th) {
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.refs[a] < s.refs[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool dup = false;
    for (std::size_t k : kept) {
      if (s.refs[k].volume_id != s.refs[i].volume_id) continue;
      double dot = 0, na = 0, nb = 0;
      for (std::size_t j = 0; j < s.dim; ++j) {
        dot += double(s.row(i)[j]) * s.row(k)[j];
        na += double(s.row(i)[j]) * s.row(i)[j];
        nb += double(s.row(k)[j]) * s.row(k)[j];
      }
      dup |= dot / std::sqrt(na * nb) > th;
    }
    if (!dup) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<PatchRef> out;
  for (std::size_t i : kept) out.push_back(s.refs[i]);
  return out;
}

template <class T>
void put(std::string& b, T v) {
  char c[sizeof(T)];
  std::memcpy(c, &v, sizeof(T));
  b.append(c, sizeof(T));
}

}  // namespace

TEST_CASE("patch grid counts") {
  CHECK(extract_patches(ramp(256, 384), "v", 0).size() == 6);
  CHECK(extract_patches(ramp(200, 200), "v", 0).size() == 1);
  CHECK(extract_patches(ramp(640, 368), "v", 0).size() == 10);

  const auto img = ramp(128, 128);
  const auto one = extract_patches(img, "v", 3);
  REQUIRE(one.size() == 1);
  CHECK(one[0].tile == img.pixels);
  CHECK(one[0].ref == PatchRef{"v", 3, 0, 0});

  const auto big = ramp(256, 384);
  const auto six = extract_patches(big, "w", 1);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(six[i].ref.patch_row == i / 3);
    CHECK(six[i].ref.patch_col == i % 3);
    CHECK(six[i].tile(5, 7) == big.pixels(six[i].ref.patch_row * 128 + 5, six[i].ref.patch_col * 128 + 7));
  }
}

TEST_CASE("short images are padded symmetrically") {
  const auto img = ramp(100, 300);
  const auto p = extract_patches(img, "v", 0);
  REQUIRE(p.size() == 2);
  // 28 rows of padding split 14/14
  CHECK(p[0].tile(13, 0) == 0.0);
  CHECK(p[0].tile(14, 0) == img.pixels(0, 0));
  CHECK(p[0].tile(113, 5) == img.pixels(99, 5));
  CHECK(p[0].tile(114, 5) == 0.0);
  CHECK(p[1].tile(20, 3) == img.pixels(6, 131));
  const auto tiny = extract_patches(ramp(30, 31), "v", 0);
  REQUIRE(tiny.size() == 1);
  // 98 rows of padding split 49/49, 97 columns split 48/49
  CHECK(tiny[0].tile(48, 48) == 0.0);
  CHECK(tiny[0].tile(49, 47) == 0.0);
  CHECK(tiny[0].tile(49, 49) == ramp(30, 31).pixels(0, 1));
  CHECK(tiny[0].tile(78, 78) == ramp(30, 31).pixels(29, 30));
  CHECK(tiny[0].tile(79, 78) == 0.0);
  CHECK(tiny[0].tile(78, 79) == 0.0);
}

TEST_CASE("embedding file round-trip") {
  std::mt19937_64 rng(1);
  testing::TempDir dir("kemb");
  const auto set = testing::random_set(rng, 37, 13, "model-é");
  write_embeddings(dir / "a.kemb", set);
  const auto back = read_embeddings(dir / "a.kemb");
  CHECK(back.model_id == set.model_id);
  CHECK(back.dim == 13);
  CHECK(back.refs == set.refs);
  CHECK(std::memcmp(back.matrix.data(), set.matrix.data(), set.matrix.size() * 4) == 0);

  // empty set
  write_embeddings(dir / "e.kemb", EmbeddingSet{"m", 4, {}, {}});
  CHECK(read_embeddings(dir / "e.kemb").size() == 0);
}

TEST_CASE("corrupt embedding files") {
  std::mt19937_64 rng(2);
  testing::TempDir dir("kembbad");
  write_embeddings(dir / "a.kemb", testing::random_set(rng, 5, 4));
  std::string bytes;
  {
    std::ifstream in(dir / "a.kemb", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& b) {
    std::ofstream(dir / name, std::ios::binary) << b;
    return dir / name;
  };
  for (std::size_t cut : {3u, 10u, 20u, 60u, static_cast<unsigned>(bytes.size() - 1)})
    CHECK(code_of([&] { read_embeddings(write("t.kemb", bytes.substr(0, cut))); }) ==
          (cut < 4 ? ErrorCode::FormatError : ErrorCode::LengthError));
  CHECK(code_of([&] { read_embeddings(write("x.kemb", bytes + "extra")); }) == ErrorCode::LengthError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of([&] { read_embeddings(write("m.kemb", magic)); }) == ErrorCode::FormatError);
  auto version = bytes;
  version[4] = 2;
  CHECK(code_of([&] { read_embeddings(write("v.kemb", version)); }) == ErrorCode::FormatError);
  CHECK(code_of([&] { read_embeddings(dir / "none.kemb"); }) == ErrorCode::MissingFile);
  EmbeddingSet bad{"m", 3, std::vector<float>(7), {{"a", 0, 0, 0}, {"a", 1, 0, 0}}};
  CHECK(code_of([&] { write_embeddings(dir / "b.kemb", bad); }) == ErrorCode::LengthError);
}

TEST_CASE("exporter-written file is readable") {
  // assembled byte by byte the way the Python exporter writes it
  const std::uint32_t n = 6, d = 1792;
  const std::string model = "dreamsim-ensemble";
  std::string b = "KEMB";
  put<std::uint32_t>(b, 1);
  put<std::uint32_t>(b, n);
  put<std::uint32_t>(b, d);
  put<std::uint16_t>(b, static_cast<std::uint16_t>(model.size()));
  b += model;
  for (std::uint32_t i = 0; i < n * d; ++i) put<float>(b, static_cast<float>(i % 97) * 0.01f - 0.3f);
  std::string refs;
  for (std::uint32_t i = 0; i < n; ++i)
    refs += "{\"volume_id\": \"file_" + std::to_string(i / 2) + "\", \"slice_index\": " + std::to_string(i % 2) +
            ", \"patch_row\": 0, \"patch_col\": " + std::to_string(i % 3) + "}\n";
  put<std::uint64_t>(b, refs.size());
  b += refs;
  testing::TempDir dir("export");
  std::ofstream(dir / "x.kemb", std::ios::binary) << b;
  const auto s = read_embeddings(dir / "x.kemb");
  CHECK(s.size() == 6);
  CHECK(s.dim == 1792);
  CHECK(s.model_id == model);
  CHECK(s.refs[5] == PatchRef{"file_2", 1, 0, 2});
  CHECK(s.row(1)[3] == static_cast<float>((1792 + 3) % 97) * 0.01f - 0.3f);
}

TEST_CASE("cosine") {
  const std::vector<float> a{1, 2, 3}, b{-2, 0.5, 4}, z{0, 0, 0};
  const double expect = (-2 + 1 + 12) / (std::sqrt(14.0) * std::sqrt(20.25));
  CHECK(cosine(a, b) == doctest::Approx(expect).epsilon(1e-12));
  std::vector<float> scaled_a{3, 6, 9};
  CHECK(cosine(scaled_a, b) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(cosine(a, z) == 0.0);
  CHECK(code_of([&] { cosine(a, std::vector<float>{1, 2}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("empty-patch rejection") {
  Eigen::MatrixXd g(4, 4);
  // row 0 is the zero embedding; cosines 0.59, 0.61, 0 with the others
  g << 1, 0.59, 0.61, 0, 0.59, 1, 0.3, 0.1, 0.61, 0.3, 1, 0.1, 0, 0.1, 0.1, 1;
  auto all = from_gram(g, {{"z", 0, 0, 0}, {"a", 0, 0, 0}, {"a", 1, 0, 0}, {"b", 0, 0, 0}});
  const auto zero = all.subset({0});
  const auto rows = all.subset({1, 2, 3});
  CHECK(cosine(rows.row(0), zero.row(0)) == doctest::Approx(0.59).epsilon(1e-6));
  const auto kept = reject_empty(rows, zero);
  CHECK(refs_of(kept) == std::vector<PatchRef>{{"a", 0, 0, 0}, {"b", 0, 0, 0}});
  CHECK(refs_of(reject_empty(kept, zero)) == refs_of(kept));
  CHECK(reject_empty(zero, zero).size() == 0);

  auto other = zero;
  other.model_id = "n";
  CHECK(code_of([&] { reject_empty(rows, other); }) == ErrorCode::ModelMismatch);
}

TEST_CASE("within-volume dedup") {
  Eigen::MatrixXd g(3, 3);
  g << 1, 0.95, 0.85, 0.95, 1, 0.95, 0.85, 0.95, 1;
  const auto chain = from_gram(g, {{"v", 0, 0, 0}, {"v", 1, 0, 0}, {"v", 2, 0, 0}});
  CHECK(refs_of(dedup_within_volume(chain)) == std::vector<PatchRef>{{"v", 0, 0, 0}, {"v", 2, 0, 0}});

  EmbeddingSet twins{"m", 2, {1, 0, 1, 0, 1, 0}, {{"a", 0, 0, 0}, {"a", 1, 0, 0}, {"b", 0, 0, 0}}};
  CHECK(refs_of(dedup_within_volume(twins)) == std::vector<PatchRef>{{"a", 0, 0, 0}, {"b", 0, 0, 0}});

  // earliest ref wins even when rows arrive out of order
  EmbeddingSet shuffled{"m", 2, {1, 0, 1, 0}, {{"a", 5, 0, 0}, {"a", 2, 1, 0}}};
  CHECK(refs_of(dedup_within_volume(shuffled)) == std::vector<PatchRef>{{"a", 2, 1, 0}});

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = testing::random_set(rng, 60, 3, "m", 5, 2);
    for (double th : {0.5, 0.8, 0.9}) {
      const auto d = dedup_within_volume(s, th);
      CHECK(refs_of(d) == dedup_oracle(s, th));
      CHECK(refs_of(dedup_within_volume(d, th)) == refs_of(d));
    }
    std::size_t prev = s.size() + 1;
    for (double th = 1.0; th >= -1.0; th -= 0.1) {
      const std::size_t n = dedup_within_volume(s, th).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("toy embedder") {
  const ToyEmbedder e(32, 3);
  const auto zero = e.zero_embedding();
  CHECK(zero.size() == 1);
  CHECK(zero.model_id == e.model_id());
  CHECK(cosine(e.embed(RealImage(128, 128, 0.0)), zero.row(0)) == doctest::Approx(1.0));
  // a flat tile embeds exactly like the empty one
  CHECK(cosine(e.embed(RealImage(128, 128, 0.7)), zero.row(0)) == doctest::Approx(1.0));
  const auto patches = extract_patches(ramp(256, 256), "v", 0);
  const auto a = e.embed_all(patches);
  const auto b = serial::embed_all(e, patches);
  CHECK(a.matrix == b.matrix);
  CHECK(a.refs == b.refs);
  CHECK(a.size() == 4);
  CHECK(cosine(a.row(0), zero.row(0)) < 0.6);
  CHECK(ToyEmbedder(32, 4).model_id() != e.model_id());
  CHECK(code_of([&] { e.embed(RealImage(64, 64)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("patch export round-trip") {
  testing::TempDir dir("pexp");
  auto patches = extract_patches(ramp(256, 128), "vol", 4);
  write_patch_export(dir.path(), patches);
  const auto back = read_patch_export(dir.path());
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].ref == patches[i].ref);
    for (std::size_t p = 0; p < back[i].tile.size(); ++p)
      CHECK(back[i].tile.data[p] == static_cast<double>(static_cast<float>(patches[i].tile.data[p])));
  }
  CHECK(std::filesystem::file_size(dir / "patches.f32") == 2 * 128 * 128 * 4);
  std::filesystem::resize_file(dir / "patches.f32", 100);
  CHECK(code_of([&] { read_patch_export(dir.path()); }) == ErrorCode::LengthError);
}
