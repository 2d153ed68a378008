#pragma once

#include <span>
#include <vector>

#include "kcurate/curation.hpp"
#include "kcurate/embedding.hpp"

namespace kcurate {

struct Neighbor {
  std::size_t row = 0;
  double score = 0.0;
};

// Exact cosine index over unit-normalized pool rows (float64). Neighbours are
// ordered by descending cosine, ties by ascending PatchRef, then row.
class RetrievalIndex {
 public:
  explicit RetrievalIndex(const EmbeddingSet& pool);

  std::size_t size() const { return refs_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& model_id() const { return model_id_; }
  const std::vector<PatchRef>& refs() const { return refs_; }
  std::span<const double> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }

  // KTooLarge unless 1 <= k <= size().
  std::vector<Neighbor> knn(std::span<const float> query, std::size_t k) const;
  // One neighbour list per query row, parallel over queries.
  std::vector<std::vector<Neighbor>> knn_batch(const EmbeddingSet& queries, std::size_t k) const;

  std::vector<double> normalized_query(std::span<const float> query) const;
  double score(std::span<const double> unit_query, std::size_t row) const;
  // Strict weak order: true when a ranks before b.
  bool ranks_before(const Neighbor& a, const Neighbor& b) const;

 private:
  std::string model_id_;
  std::size_t dim_ = 0;
  std::vector<double> rows_;
  std::vector<PatchRef> refs_;
  std::vector<std::size_t> ref_rank_;  // position of each row in ref order
};

enum class AlignmentMode { Plain, Weighted };

// Retrieves the k nearest pool patches of every validation patch, maps hits to
// parent slices, and uses the smallest k whose unique-slice count reaches
// ceil(retention * pool slices). Rank-k hits that would add slices past the
// target are dropped, highest cosine first taking precedence. Plain mode weights every
// slice 1; weighted mode weights it by sqrt(number of patch hits).
CurationResult alignment_filter(const EmbeddingSet& pool, const EmbeddingSet& validation, double retention,
                                AlignmentMode mode = AlignmentMode::Plain);

inline CurationResult weighted_alignment_filter(const EmbeddingSet& pool, const EmbeddingSet& validation,
                                                double retention) {
  return alignment_filter(pool, validation, retention, AlignmentMode::Weighted);
}

// Curation at a fixed k, no search.
CurationResult alignment_select_at_k(const EmbeddingSet& pool, const EmbeddingSet& validation, std::size_t k,
                                     AlignmentMode mode);

std::string to_string(AlignmentMode m);
AlignmentMode alignment_mode_from_string(const std::string& s);

}  // namespace kcurate
