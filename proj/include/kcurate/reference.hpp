#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kcurate/embedding.hpp"
#include "kcurate/frechet.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/recon.hpp"
#include "kcurate/retrieval.hpp"
#include "kcurate/toy_embedder.hpp"

// Plain single-threaded versions of the parallel kernels. Tests compare
// against them and the benchmark times both.
namespace kcurate::serial {

VolumeRecon reconstruct_volume(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask);

// Scores every pool row, then sorts all of them.
std::vector<Neighbor> knn(const EmbeddingSet& pool, std::span<const float> query, std::size_t k);

// Straight two-pass mean / covariance over the rows.
GaussianFit fit_gaussian(const Eigen::MatrixXd& rows);
GaussianFit fit_gaussian(const EmbeddingSet& set);

std::vector<SliceScore> score_slices(const std::vector<VolumeMagnitudes>& volumes, const CannyParams& params = {});

EmbeddingSet embed_all(const ToyEmbedder& embedder, const std::vector<Patch>& patches);

}  // namespace kcurate::serial
