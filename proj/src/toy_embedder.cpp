#include "kcurate/toy_embedder.hpp"

#include <cmath>

#include "kcurate/parallel.hpp"
#include "kcurate/philox.hpp"

namespace kcurate {
namespace {
constexpr std::size_t kPool = 16;
constexpr std::size_t kFeatures = kPool * kPool;
}  // namespace

ToyEmbedder::ToyEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed), projection_(dim * kFeatures), bias_(dim) {
  require(dim >= 2, ErrorCode::InvalidArgument, "toy embedding dimension must be >= 2");
  CounterRng rng(seed, 1);
  const double scale = 4.0 / std::sqrt(static_cast<double>(kFeatures));
  for (auto& v : projection_) v = scale * rng.normal();
  CounterRng brng(seed, 2);
  double norm = 0.0;
  for (auto& v : bias_) {
    v = brng.normal();
    norm += v * v;
  }
  for (auto& v : bias_) v /= std::sqrt(norm);
}

std::string ToyEmbedder::model_id() const {
  return "toy-randproj-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

std::vector<float> ToyEmbedder::embed(const RealImage& tile) const {
  require(tile.ny == kPatchSize && tile.nx == kPatchSize, ErrorCode::ShapeMismatch, "toy embedder needs 128x128 tiles");
  constexpr std::size_t block = kPatchSize / kPool;
  std::vector<double> f(kFeatures, 0.0);
  for (std::size_t r = 0; r < kPatchSize; ++r)
    for (std::size_t c = 0; c < kPatchSize; ++c) f[(r / block) * kPool + c / block] += tile(r, c);
  double mean = 0.0;
  for (auto& v : f) {
    v /= static_cast<double>(block * block);
    mean += v;
  }
  mean /= static_cast<double>(kFeatures);
  for (auto& v : f) v -= mean;
  std::vector<float> out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = bias_[i];
    const double* p = projection_.data() + i * kFeatures;
    for (std::size_t j = 0; j < kFeatures; ++j) acc += p[j] * f[j];
    out[i] = static_cast<float>(acc);
  }
  return out;
}

EmbeddingSet ToyEmbedder::embed_all(const std::vector<Patch>& patches) const {
  EmbeddingSet set{model_id(), dim_, std::vector<float>(patches.size() * dim_), {}};
  set.refs.reserve(patches.size());
  for (const auto& p : patches) set.refs.push_back(p.ref);
  parallel_for(static_cast<std::ptrdiff_t>(patches.size()), [&](std::ptrdiff_t i) {
    const auto e = embed(patches[static_cast<std::size_t>(i)].tile);
    std::copy(e.begin(), e.end(), set.matrix.begin() + i * static_cast<std::ptrdiff_t>(dim_));
  });
  return set;
}

EmbeddingSet ToyEmbedder::zero_embedding() const {
  const RealImage zero(kPatchSize, kPatchSize, 0.0);
  return {model_id(), dim_, embed(zero), {PatchRef{"__zero__", 0, 0, 0}}};
}

}  // namespace kcurate
