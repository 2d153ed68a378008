#include <algorithm>
#include <cmath>

#include "kcurate/reference.hpp"

namespace kcurate::serial {

namespace {
std::vector<double> unit(std::span<const float> v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = n > 0.0 ? v[j] / n : 0.0;
  return out;
}
}  // namespace

std::vector<Neighbor> knn(const EmbeddingSet& pool, std::span<const float> query, std::size_t k) {
  if (k < 1 || k > pool.size()) fail(ErrorCode::KTooLarge, "k outside [1, n]");
  require(query.size() == pool.dim, ErrorCode::DimensionMismatch, "query dimension");
  const auto q = unit(query);
  std::vector<Neighbor> all(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto r = unit(pool.row(i));
    double s = 0.0;
    for (std::size_t j = 0; j < pool.dim; ++j) s += q[j] * r[j];
    all[i] = {i, s};
  }
  std::sort(all.begin(), all.end(), [&](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    if (!(pool.refs[a.row] == pool.refs[b.row])) return pool.refs[a.row] < pool.refs[b.row];
    return a.row < b.row;
  });
  all.resize(k);
  return all;
}

}  // namespace kcurate::serial
