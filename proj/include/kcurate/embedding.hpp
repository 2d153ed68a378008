#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kcurate/array.hpp"

namespace kcurate {

inline constexpr std::size_t kPatchSize = 128;

struct PatchRef {
  std::string volume_id;
  std::size_t slice_index = 0;
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;

  auto key() const { return std::tie(volume_id, slice_index, patch_row, patch_col); }
  bool operator==(const PatchRef& o) const { return key() == o.key(); }
  bool operator<(const PatchRef& o) const { return key() < o.key(); }
};

struct Patch {
  PatchRef ref;
  RealImage tile;  // kPatchSize x kPatchSize
};

// Non-overlapping 128x128 tiles in raster order; images shorter than 128 on a
// side are zero-padded symmetrically to 128 first, tail pixels are dropped.
std::vector<Patch> extract_patches(const MagnitudeImage& image, const std::string& volume_id, std::size_t slice_index);

struct EmbeddingSet {
  std::string model_id;
  std::size_t dim = 0;
  std::vector<float> matrix;  // row-major [n, dim]
  std::vector<PatchRef> refs;

  std::size_t size() const { return refs.size(); }
  std::span<const float> row(std::size_t i) const { return {matrix.data() + i * dim, dim}; }

  // n == |refs|, matrix length n * dim, no NaN rows.
  void validate() const;
  EmbeddingSet subset(const std::vector<std::size_t>& rows) const;
};

// Cosine similarity with float64 accumulation; zero vectors give 0.
double cosine(std::span<const float> a, std::span<const float> b);

// Little-endian "KEMB" v1 file: magic, u32 version, u32 n, u32 d, u16 model id
// length, model id bytes, n*d float32, u64 refs byte length, JSON-lines refs.
void write_embeddings(const std::filesystem::path& file, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const std::filesystem::path& file);

// Drops rows whose cosine with the all-zero patch embedding exceeds threshold.
EmbeddingSet reject_empty(const EmbeddingSet& set, const EmbeddingSet& zero_embedding, double threshold = 0.6);

// Greedy per-volume pass in (slice, patch) order: a row is kept unless its
// cosine with an already kept row of the same volume exceeds threshold.
EmbeddingSet dedup_within_volume(const EmbeddingSet& set, double threshold = 0.9);

// Patch export consumed by the embedding exporter: `patches.f32` holds the
// tiles back to back as float32 LE, `refs.jsonl` the refs in the same order,
// `patches.json` the count and tile size.
void write_patch_export(const std::filesystem::path& dir, const std::vector<Patch>& patches);
std::vector<Patch> read_patch_export(const std::filesystem::path& dir);

}  // namespace kcurate
