#include "kcurate/frechet.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kcurate/parallel.hpp"

namespace kcurate {
namespace {

template <class T>
T tree_reduce(std::vector<T> parts) {
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(parts[i] + parts[i + 1]);
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

// Partition depends only on (n, d).
std::size_t chunk_count(std::size_t n, std::size_t d) {
  const std::size_t blocks = (n + 255) / 256;
  const std::size_t budget = std::max<std::size_t>(1, (std::size_t{1} << 28) / std::max<std::size_t>(1, d * d * 8));
  return std::clamp<std::size_t>(std::min(blocks, budget), 1, 64);
}

template <class RowFn>
GaussianFit fit_rows(std::size_t n, std::size_t d, RowFn&& row_into) {
  require(n >= 2, ErrorCode::EmptyInput, "Gaussian fit needs at least two samples, got " + std::to_string(n));
  const std::size_t chunks = chunk_count(n, d);
  auto range = [&](std::size_t c) { return std::pair(c * n / chunks, (c + 1) * n / chunks); };

  std::vector<Eigen::VectorXd> sums(chunks, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)));
  parallel_for(static_cast<std::ptrdiff_t>(chunks), [&](std::ptrdiff_t c) {
    auto [lo, hi] = range(static_cast<std::size_t>(c));
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t i = lo; i < hi; ++i) {
      row_into(i, x);
      sums[static_cast<std::size_t>(c)] += x;
    }
  });
  GaussianFit fit;
  fit.n = n;
  fit.mean = tree_reduce(std::move(sums)) / static_cast<double>(n);

  std::vector<Eigen::MatrixXd> scatters(chunks, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  parallel_for(static_cast<std::ptrdiff_t>(chunks), [&](std::ptrdiff_t c) {
    auto [lo, hi] = range(static_cast<std::size_t>(c));
    constexpr std::size_t kBlock = 256;
    Eigen::MatrixXd block(static_cast<Eigen::Index>(kBlock), static_cast<Eigen::Index>(d));
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    auto& acc = scatters[static_cast<std::size_t>(c)];
    for (std::size_t start = lo; start < hi; start += kBlock) {
      const std::size_t rows = std::min(kBlock, hi - start);
      for (std::size_t r = 0; r < rows; ++r) {
        row_into(start + r, x);
        block.row(static_cast<Eigen::Index>(r)) = (x - fit.mean).transpose();
      }
      const auto b = block.topRows(static_cast<Eigen::Index>(rows));
      acc.noalias() += b.transpose() * b;
    }
  });
  Eigen::MatrixXd cov = tree_reduce(std::move(scatters)) / static_cast<double>(n - 1);
  fit.covariance = 0.5 * (cov + cov.transpose());
  return fit;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NumericFailure, "eigendecomposition did not converge");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  if (!vals.allFinite()) fail(ErrorCode::NumericFailure, "non-finite eigenvalue in matrix square root");
  const Eigen::VectorXd root = vals.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NumericFailure, "eigendecomposition did not converge");
  if (!eig.eigenvalues().allFinite()) fail(ErrorCode::NumericFailure, "non-finite eigenvalue in matrix square root");
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

GaussianFit fit_gaussian(const EmbeddingSet& set) {
  set.validate();
  return fit_rows(set.size(), set.dim, [&](std::size_t i, Eigen::VectorXd& x) {
    auto r = set.row(i);
    for (std::size_t j = 0; j < set.dim; ++j) x[static_cast<Eigen::Index>(j)] = r[j];
  });
}

GaussianFit fit_gaussian(const Eigen::MatrixXd& rows) {
  return fit_rows(static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols()),
                  [&](std::size_t i, Eigen::VectorXd& x) { x = rows.row(static_cast<Eigen::Index>(i)).transpose(); });
}

FrechetResult frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean.size() != b.mean.size())
    fail(ErrorCode::DimensionMismatch,
         "Gaussian dimensions " + std::to_string(a.mean.size()) + " and " + std::to_string(b.mean.size()));
  const auto d = static_cast<std::size_t>(a.mean.size());
  FrechetResult out;
  Eigen::MatrixXd sa = a.covariance, sb = b.covariance;
  if (a.n < d || b.n < d) {
    const double mean_diag = 0.5 * (sa.diagonal().mean() + sb.diagonal().mean());
    out.ridge = 1e-6 * mean_diag;
    out.ridge_applied = true;
    sa.diagonal().array() += out.ridge;
    sb.diagonal().array() += out.ridge;
  }
  const Eigen::MatrixXd root_a = psd_sqrt(sa);
  Eigen::MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * trace_sqrt(inner);
  if (!std::isfinite(value)) fail(ErrorCode::NumericFailure, "Frechet distance is not finite");
  const double scale = std::max({1.0, sa.trace(), sb.trace(), mean_term});
  if (value < -1e-8 * scale) fail(ErrorCode::NumericFailure, "Frechet distance is negative: " + std::to_string(value));
  out.value = std::max(0.0, value);
  return out;
}

FddResult fdd(const EmbeddingSet& pool, const EmbeddingSet& reference) {
  if (pool.model_id != reference.model_id)
    fail(ErrorCode::ModelMismatch, "pool from '" + pool.model_id + "', reference from '" + reference.model_id + "'");
  if (pool.dim != reference.dim) fail(ErrorCode::DimensionMismatch, "embedding dimensions differ");
  const auto r = frechet_distance(fit_gaussian(pool), fit_gaussian(reference));
  return {r.value, pool.size(), reference.size(), pool.dim, r.ridge_applied};
}

}  // namespace kcurate
