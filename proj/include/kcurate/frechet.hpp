#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "kcurate/embedding.hpp"

namespace kcurate {

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, symmetrized
  std::size_t n = 0;
};

// Sample mean and (n - 1)-normalized covariance. Rows are reduced in fixed
// 256-row blocks combined by a pairwise tree, so the result does not depend
// on the thread count.
GaussianFit fit_gaussian(const EmbeddingSet& set);
GaussianFit fit_gaussian(const Eigen::MatrixXd& rows);  // one sample per row

struct FrechetResult {
  double value = 0.0;
  bool ridge_applied = false;
  double ridge = 0.0;
};

// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2) with symmetric
// eigendecomposition square roots (eigenvalues clamped at 0). When either fit
// has fewer samples than dimensions both covariances get the same ridge
// 1e-6 * mean diagonal.
FrechetResult frechet_distance(const GaussianFit& a, const GaussianFit& b);

struct FddResult {
  double value = 0.0;
  std::size_t n_a = 0, n_b = 0, dim = 0;
  bool ridge_applied = false;
};

FddResult fdd(const EmbeddingSet& pool, const EmbeddingSet& reference);

}  // namespace kcurate
