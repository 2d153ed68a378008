#include "kcurate/reference.hpp"

namespace kcurate::serial {

GaussianFit fit_gaussian(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  require(n >= 2, ErrorCode::EmptyInput, "need two samples");
  GaussianFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) fit.mean += rows.row(i).transpose();
  fit.mean /= static_cast<double>(n);
  fit.covariance = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = rows.row(i).transpose() - fit.mean;
    fit.covariance += x * x.transpose();
  }
  fit.covariance /= static_cast<double>(n - 1);
  return fit;
}

GaussianFit fit_gaussian(const EmbeddingSet& set) {
  set.validate();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(set.dim));
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = 0; j < set.dim; ++j)
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = set.row(i)[j];
  return fit_gaussian(rows);
}

}  // namespace kcurate::serial
