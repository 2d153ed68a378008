#pragma once

#include <string>
#include <vector>

#include "kcurate/array.hpp"
#include "kcurate/curation.hpp"

namespace kcurate {

struct CannyParams {
  double sigma = 2.0;
  double low = 0.01;
  double high = 0.2;
};

// Per slice max(slice) / max(volume) on raw magnitudes. UndefinedRatio if the
// whole volume is zero.
std::vector<double> energy_ratio(const std::vector<MagnitudeImage>& volume);

// Canny detector with the semantics of skimage.feature.canny (absolute
// thresholds on the unnormalized Sobel magnitude): Gaussian blur truncated at
// 4 sigma with reflect borders, Sobel gradients, interpolated non-maximum
// suppression, border pixels excluded, 8-connected hysteresis.
// ImageTooSmall when either side is shorter than the blur kernel.
BoolImage canny_edges(const MagnitudeImage& image, const CannyParams& params = {});

double edge_density(const MagnitudeImage& image, const CannyParams& params = {});

// Scales every slice by the volume maximum so the brightest pixel is 1.
std::vector<MagnitudeImage> normalize_volume_max(const std::vector<MagnitudeImage>& volume);

struct SliceScore {
  std::string volume_id;
  std::size_t slice_index = 0;
  double energy_ratio = 0.0;
  double edge_density = 0.0;
};

struct HeuristicThresholds {
  double energy = 0.11;
  double edge = 0.017;
};

struct VolumeMagnitudes {
  std::string volume_id;
  std::vector<MagnitudeImage> slices;  // raw magnitudes
};

// Scores every slice of every volume, parallel over slices.
std::vector<SliceScore> score_slices(const std::vector<VolumeMagnitudes>& volumes, const CannyParams& params = {});

// Keeps slices strictly above both thresholds, weights 1.
CurationResult heuristic_select(const std::vector<SliceScore>& scores, const HeuristicThresholds& th);

// Manifest-driven variant: reconstructions are read from `recon_dir/<volume_id>.h5`.
// MissingArtifact when a manifest slice has no reconstruction.
CurationResult heuristic_filter(const DatasetManifest& manifest, const std::filesystem::path& recon_dir,
                                const HeuristicThresholds& th, std::vector<SliceScore>* scores_out = nullptr);

}  // namespace kcurate
