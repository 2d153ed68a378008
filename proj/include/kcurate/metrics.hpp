#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kcurate/array.hpp"
#include "kcurate/manifest.hpp"

namespace kcurate {

struct Normalized {
  RealImage image;
  bool degenerate = false;  // recon had zero variance on the mask
};

// a * recon + b with a > 0 so that mean and variance over the mask match the
// reference. DegenerateMask for an empty mask or a reference that is constant
// on it.
Normalized normalize_to_reference(const RealImage& recon, const RealImage& reference, const BoolImage& mask);

struct SsimParams {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Both images are zeroed outside the mask; SSIM is averaged over window
// centres inside the mask whose 7x7 window lies inside the image. The data
// range is the masked maximum of the reference.
double masked_ssim(const RealImage& recon, const RealImage& reference, const BoolImage& mask, const SsimParams& p = {});
// +inf when recon equals reference on the mask.
double masked_psnr(const RealImage& recon, const RealImage& reference, const BoolImage& mask);
double masked_nmse(const RealImage& recon, const RealImage& reference, const BoolImage& mask);

struct MetricRow {
  std::string volume_id;
  std::size_t slice_index = 0;
  std::string distribution_key;
  double ssim = 0.0;
  double psnr_db = 0.0;
  double nmse = 0.0;
  bool flagged = false;
};

struct MetricMeans {
  double ssim = 0.0;
  double psnr_db = 0.0;
  double nmse = 0.0;
};

struct DistributionMean {
  std::string key;
  std::size_t n = 0;
  MetricMeans means;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<DistributionMean> distributions;
  MetricMeans grand_mean;  // mean of distribution means
  std::optional<Interval> ci;
  std::string ci_metric;
  std::vector<std::string> skipped;
};

// Unweighted mean inside each distribution key, then across keys.
MetricReport aggregate(const std::vector<MetricRow>& rows);

struct KeyedValue {
  std::string key;
  double value = 0.0;
};

double two_stage_mean(std::span<const KeyedValue> values);

// Percentile bootstrap of the two-stage mean: every resample redraws each
// distribution with replacement at its original size.
Interval bootstrap_ci(std::span<const KeyedValue> values, std::size_t resamples = 10000, double level = 0.95,
                      std::uint64_t seed = 0);

std::string distribution_key(const SliceRecord& r);

struct EvalOptions {
  double mask_tau = 0.5;
  std::size_t bootstrap = 0;  // 0 disables the confidence interval
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> baseline_dir;  // CI over per-slice SSIM differences
};

// Compares `recon_dir/<id>.h5` against `ref_dir/<id>.h5` (which must carry
// sensitivity maps for the foreground mask) for every manifest slice.
MetricReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& recon_dir,
                      const std::filesystem::path& ref_dir, const EvalOptions& opts);

nlohmann::json to_json(const MetricReport& report);

}  // namespace kcurate
