// Parallel kernels against their serial references. Args are problem sizes.

#include <map>
#include <random>

#include <benchmark/benchmark.h>

#include "kcurate/embedding.hpp"
#include "kcurate/frechet.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/phantom.hpp"
#include "kcurate/recon.hpp"
#include "kcurate/reference.hpp"
#include "kcurate/retrieval.hpp"
#include "kcurate/toy_embedder.hpp"

using namespace kcurate;

namespace {

EmbeddingSet random_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  EmbeddingSet s{"bench", d, std::vector<float>(n * d), {}};
  for (auto& v : s.matrix) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) s.refs.push_back({"v" + std::to_string(i / 64), (i / 4) % 16, 0, i % 4});
  return s;
}

const KSpaceVolume& volume(std::size_t size) {
  static std::map<std::size_t, KSpaceVolume> cache;
  auto it = cache.find(size);
  if (it == cache.end()) it = cache.emplace(size, make_phantom_volume("bench", 16, size, 8, 0.001, 3)).first;
  return it->second;
}

std::vector<VolumeMagnitudes> magnitudes(std::size_t size) {
  const auto& vol = volume(size);
  VolumeMagnitudes v{"bench", {}};
  for (std::size_t s = 0; s < vol.slices(); ++s) v.slices.push_back(rss(vol.slice(s)));
  return {v};
}

std::vector<Patch> patches(std::size_t n) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::vector<Patch> out;
  for (std::size_t i = 0; i < n; ++i) {
    Patch p{{"v", i / 4, (i % 4) / 2, i % 2}, RealImage(kPatchSize, kPatchSize)};
    for (auto& v : p.tile.data) v = u(rng);
    out.push_back(std::move(p));
  }
  return out;
}

const ReconOptions kMvue{ReconMethod::Mvue, 0.16, {0.05}};

void BM_recon_parallel(benchmark::State& st) {
  const auto& vol = volume(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reconstruct_volume(vol, kMvue, nullptr));
}
void BM_recon_serial(benchmark::State& st) {
  const auto& vol = volume(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::reconstruct_volume(vol, kMvue, nullptr));
}

void BM_knn_parallel(benchmark::State& st) {
  const auto pool = random_set(static_cast<std::size_t>(st.range(0)), 64, 1);
  const auto queries = random_set(256, 64, 2);
  const RetrievalIndex index(pool);
  for (auto _ : st) benchmark::DoNotOptimize(index.knn_batch(queries, 20));
}
void BM_knn_serial(benchmark::State& st) {
  const auto pool = random_set(static_cast<std::size_t>(st.range(0)), 64, 1);
  const auto queries = random_set(256, 64, 2);
  for (auto _ : st)
    for (std::size_t q = 0; q < queries.size(); ++q) benchmark::DoNotOptimize(serial::knn(pool, queries.row(q), 20));
}

void BM_fit_parallel(benchmark::State& st) {
  const auto set = random_set(static_cast<std::size_t>(st.range(0)), 256, 3);
  for (auto _ : st) benchmark::DoNotOptimize(fit_gaussian(set));
}
void BM_fit_serial(benchmark::State& st) {
  const auto set = random_set(static_cast<std::size_t>(st.range(0)), 256, 3);
  for (auto _ : st) benchmark::DoNotOptimize(serial::fit_gaussian(set));
}

void BM_heuristic_parallel(benchmark::State& st) {
  const auto vols = magnitudes(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(score_slices(vols));
}
void BM_heuristic_serial(benchmark::State& st) {
  const auto vols = magnitudes(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::score_slices(vols));
}

void BM_embed_parallel(benchmark::State& st) {
  const auto p = patches(static_cast<std::size_t>(st.range(0)));
  const ToyEmbedder e(64, 7);
  for (auto _ : st) benchmark::DoNotOptimize(e.embed_all(p));
}
void BM_embed_serial(benchmark::State& st) {
  const auto p = patches(static_cast<std::size_t>(st.range(0)));
  const ToyEmbedder e(64, 7);
  for (auto _ : st) benchmark::DoNotOptimize(serial::embed_all(e, p));
}

}  // namespace

BENCHMARK(BM_recon_parallel)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_recon_serial)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_knn_parallel)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_knn_serial)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_fit_parallel)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_fit_serial)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_heuristic_parallel)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_heuristic_serial)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_embed_parallel)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_embed_serial)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
