#include "kcurate/reference.hpp"

namespace kcurate::serial {

EmbeddingSet embed_all(const ToyEmbedder& embedder, const std::vector<Patch>& patches) {
  EmbeddingSet set{embedder.model_id(), embedder.dim(), {}, {}};
  for (const auto& p : patches) {
    const auto e = embedder.embed(p.tile);
    set.matrix.insert(set.matrix.end(), e.begin(), e.end());
    set.refs.push_back(p.ref);
  }
  return set;
}

}  // namespace kcurate::serial
