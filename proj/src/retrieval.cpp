#include "kcurate/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kcurate/parallel.hpp"

namespace kcurate {

RetrievalIndex::RetrievalIndex(const EmbeddingSet& pool)
    : model_id_(pool.model_id), dim_(pool.dim), rows_(pool.matrix.size()), refs_(pool.refs), ref_rank_(pool.size()) {
  pool.validate();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto src = pool.row(i);
    double norm = 0.0;
    for (float v : src) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    double* dst = rows_.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) dst[j] = norm > 0.0 ? src[j] / norm : 0.0;
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return refs_[a] < refs_[b]; });
  for (std::size_t pos = 0; pos < order.size(); ++pos) ref_rank_[order[pos]] = pos;
}

std::vector<double> RetrievalIndex::normalized_query(std::span<const float> query) const {
  require(query.size() == dim_, ErrorCode::DimensionMismatch,
          "query has dimension " + std::to_string(query.size()) + ", index " + std::to_string(dim_));
  double norm = 0.0;
  for (float v : query) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  std::vector<double> q(dim_);
  for (std::size_t j = 0; j < dim_; ++j) q[j] = norm > 0.0 ? query[j] / norm : 0.0;
  return q;
}

double RetrievalIndex::score(std::span<const double> unit_query, std::size_t row) const {
  const double* r = rows_.data() + row * dim_;
  double acc = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) acc += unit_query[j] * r[j];
  return acc;
}

bool RetrievalIndex::ranks_before(const Neighbor& a, const Neighbor& b) const {
  if (a.score != b.score) return a.score > b.score;
  return ref_rank_[a.row] < ref_rank_[b.row];
}

std::vector<Neighbor> RetrievalIndex::knn(std::span<const float> query, std::size_t k) const {
  if (k < 1 || k > size())
    fail(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " outside [1, " + std::to_string(size()) + "]");
  const auto q = normalized_query(query);
  auto worse = [this](const Neighbor& a, const Neighbor& b) { return ranks_before(a, b); };
  std::vector<Neighbor> heap;
  heap.reserve(k + 1);
  constexpr std::size_t kBlock = 256;
  double scores[kBlock];
  for (std::size_t start = 0; start < size(); start += kBlock) {
    const std::size_t end = std::min(size(), start + kBlock);
    for (std::size_t i = start; i < end; ++i) scores[i - start] = score(q, i);
    for (std::size_t i = start; i < end; ++i) {
      const Neighbor cand{i, scores[i - start]};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), worse);
      } else if (ranks_before(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), worse);
      }
    }
  }
  std::sort_heap(heap.begin(), heap.end(), worse);
  return heap;
}

std::vector<std::vector<Neighbor>> RetrievalIndex::knn_batch(const EmbeddingSet& queries, std::size_t k) const {
  if (queries.model_id != model_id_)
    fail(ErrorCode::ModelMismatch, "queries from '" + queries.model_id + "', index from '" + model_id_ + "'");
  if (k < 1 || k > size())
    fail(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " outside [1, " + std::to_string(size()) + "]");
  std::vector<std::vector<Neighbor>> out(queries.size());
  parallel_for(static_cast<std::ptrdiff_t>(queries.size()),
               [&](std::ptrdiff_t i) { out[static_cast<std::size_t>(i)] = knn(queries.row(static_cast<std::size_t>(i)), k); });
  return out;
}

std::string to_string(AlignmentMode m) { return m == AlignmentMode::Plain ? "alignment" : "weighted"; }

AlignmentMode alignment_mode_from_string(const std::string& s) {
  if (s == "plain" || s == "alignment") return AlignmentMode::Plain;
  if (s == "weighted") return AlignmentMode::Weighted;
  fail(ErrorCode::InvalidArgument, "unknown alignment mode '" + s + "'");
}

namespace {

struct SliceTable {
  std::vector<std::pair<std::string, std::size_t>> slices;  // sorted
  std::vector<std::size_t> of_row;                         // pool row -> slice id
};

SliceTable slice_table(const EmbeddingSet& pool) {
  std::map<std::pair<std::string, std::size_t>, std::size_t> ids;
  for (const auto& r : pool.refs) ids.emplace(std::pair(r.volume_id, r.slice_index), 0);
  SliceTable t;
  for (auto& [key, id] : ids) {
    id = t.slices.size();
    t.slices.push_back(key);
  }
  t.of_row.reserve(pool.size());
  for (const auto& r : pool.refs) t.of_row.push_back(ids.at({r.volume_id, r.slice_index}));
  return t;
}

// limits[q] = how many leading neighbours of query q count.
std::size_t unique_slices(const std::vector<std::vector<Neighbor>>& hits, const SliceTable& t,
                          const std::vector<std::size_t>& limits) {
  std::vector<std::uint8_t> seen(t.slices.size(), 0);
  std::size_t count = 0;
  for (std::size_t q = 0; q < hits.size(); ++q)
    for (std::size_t j = 0; j < std::min(limits[q], hits[q].size()); ++j) {
      const std::size_t s = t.of_row[hits[q][j].row];
      if (!seen[s]) {
        seen[s] = 1;
        ++count;
      }
    }
  return count;
}

std::size_t unique_slices(const std::vector<std::vector<Neighbor>>& hits, const SliceTable& t, std::size_t k) {
  return unique_slices(hits, t, std::vector<std::size_t>(hits.size(), k));
}

CurationResult collect(const std::vector<std::vector<Neighbor>>& hits, const SliceTable& t,
                       const std::vector<std::size_t>& limits, AlignmentMode mode) {
  std::vector<std::size_t> counts(t.slices.size(), 0);
  for (std::size_t q = 0; q < hits.size(); ++q)
    for (std::size_t j = 0; j < std::min(limits[q], hits[q].size()); ++j) ++counts[t.of_row[hits[q][j].row]];
  CurationResult r;
  std::size_t total = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (!counts[s]) continue;
    total += counts[s];
    const double w = mode == AlignmentMode::Weighted ? std::sqrt(static_cast<double>(counts[s])) : 1.0;
    r.entries.push_back({t.slices[s].first, t.slices[s].second, w});
  }
  r.params = {{"mode", to_string(mode)}, {"pool_slices", t.slices.size()}, {"selected_slices", r.entries.size()},
              {"retrievals", total}};
  return r;
}

void check_inputs(const EmbeddingSet& pool, const EmbeddingSet& validation) {
  if (pool.model_id != validation.model_id)
    fail(ErrorCode::ModelMismatch, "pool from '" + pool.model_id + "', validation from '" + validation.model_id + "'");
  require(validation.size() > 0, ErrorCode::EmptyInput, "validation embedding set is empty");
  require(pool.size() > 0, ErrorCode::EmptyInput, "pool embedding set is empty");
  require(pool.dim == validation.dim, ErrorCode::DimensionMismatch, "pool and validation dimensions differ");
}

}  // namespace

CurationResult alignment_select_at_k(const EmbeddingSet& pool, const EmbeddingSet& validation, std::size_t k,
                                     AlignmentMode mode) {
  check_inputs(pool, validation);
  const RetrievalIndex index(pool);
  const SliceTable table = slice_table(pool);
  const auto hits = index.knn_batch(validation, k);
  CurationResult r = collect(hits, table, std::vector<std::size_t>(hits.size(), k), mode);
  r.params["k"] = k;
  return r;
}

CurationResult alignment_filter(const EmbeddingSet& pool, const EmbeddingSet& validation, double retention,
                                AlignmentMode mode) {
  if (!(retention > 0.0 && retention <= 1.0))
    fail(ErrorCode::InvalidArgument, "retention must lie in (0, 1], got " + std::to_string(retention));
  check_inputs(pool, validation);
  const RetrievalIndex index(pool);
  const SliceTable table = slice_table(pool);
  const auto target = static_cast<std::size_t>(std::ceil(retention * static_cast<double>(table.slices.size()) - 1e-9));

  // Grow the neighbour lists geometrically until the target is reachable,
  // then binary-search k over prefixes (unique-slice count is monotone in k).
  std::size_t cap = std::min(index.size(), std::max<std::size_t>(1, target / validation.size() + 1));
  std::vector<std::vector<Neighbor>> hits;
  for (;;) {
    hits = index.knn_batch(validation, cap);
    if (cap == index.size() || unique_slices(hits, table, cap) >= target) break;
    cap = std::min(index.size(), cap * 2);
  }
  std::size_t lo = 1, hi = cap;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (unique_slices(hits, table, mid) >= target)
      hi = mid;
    else
      lo = mid + 1;
  }
  // Rank-k hits are admitted best-first; once the target is met, only those
  // landing on already selected slices still count. The slice count then hits
  // the target instead of overshooting by up to one slice per query.
  std::vector<std::size_t> limits(hits.size(), lo - 1);
  std::size_t partial = 0;
  if (unique_slices(hits, table, limits) < target) {
    std::vector<std::size_t> last;
    for (std::size_t q = 0; q < hits.size(); ++q)
      if (hits[q].size() >= lo) last.push_back(q);
    std::stable_sort(last.begin(), last.end(),
                     [&](std::size_t a, std::size_t b) { return hits[a][lo - 1].score > hits[b][lo - 1].score; });
    std::vector<std::uint8_t> seen(table.slices.size(), 0);
    std::size_t count = 0;
    for (std::size_t q = 0; q < hits.size(); ++q)
      for (std::size_t j = 0; j + 1 < lo; ++j) {
        const std::size_t sl = table.of_row[hits[q][j].row];
        count += !seen[sl];
        seen[sl] = 1;
      }
    for (std::size_t q : last) {
      const std::size_t sl = table.of_row[hits[q][lo - 1].row];
      if (!seen[sl] && count >= target) continue;
      limits[q] = lo;
      ++partial;
      count += !seen[sl];
      seen[sl] = 1;
    }
  }
  CurationResult r = collect(hits, table, limits, mode);
  r.params["k"] = lo;
  r.params["rank_k_hits"] = partial;
  r.params["retention_target"] = retention;
  r.params["target_slices"] = target;
  return r;
}

}  // namespace kcurate
