#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcurate/embedding.hpp"

namespace kcurate {

// Seeded random-projection stand-in for the perceptual embedding model, used
// by tests and desk-scale pipeline runs. A tile is average-pooled to 16x16,
// mean-centred, projected, and offset by a fixed "empty" direction, which is
// exactly what the all-zero tile embeds to.
class ToyEmbedder {
 public:
  explicit ToyEmbedder(std::size_t dim = 64, std::uint64_t seed = 7);

  std::string model_id() const;
  std::size_t dim() const { return dim_; }

  std::vector<float> embed(const RealImage& tile) const;
  EmbeddingSet embed_all(const std::vector<Patch>& patches) const;
  // Single-row set for the all-zero tile.
  EmbeddingSet zero_embedding() const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> projection_;  // [dim, 256]
  std::vector<double> bias_;
};

}  // namespace kcurate
