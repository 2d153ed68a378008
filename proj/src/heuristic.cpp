#include "kcurate/heuristic.hpp"

#include <algorithm>
#include <cmath>

#include "kcurate/hdf5_io.hpp"
#include "kcurate/parallel.hpp"

namespace kcurate {
namespace fs = std::filesystem;

std::vector<double> energy_ratio(const std::vector<MagnitudeImage>& volume) {
  require(!volume.empty(), ErrorCode::EmptyInput, "energy ratio needs at least one slice");
  std::vector<double> maxima;
  maxima.reserve(volume.size());
  for (const auto& s : volume) maxima.push_back(max_value(s.pixels));
  const double vmax = *std::max_element(maxima.begin(), maxima.end());
  if (!(vmax > 0.0)) fail(ErrorCode::UndefinedRatio, "volume maximum is zero");
  for (auto& m : maxima) m /= vmax;
  return maxima;
}

std::vector<MagnitudeImage> normalize_volume_max(const std::vector<MagnitudeImage>& volume) {
  double vmax = 0.0;
  for (const auto& s : volume) vmax = std::max(vmax, max_value(s.pixels));
  std::vector<MagnitudeImage> out;
  out.reserve(volume.size());
  for (const auto& s : volume) {
    MagnitudeImage n{s.pixels, Normalization::VolumeMax};
    if (vmax > 0.0)
      for (auto& v : n.pixels.data) v /= vmax;
    out.push_back(std::move(n));
  }
  return out;
}

std::vector<SliceScore> score_slices(const std::vector<VolumeMagnitudes>& volumes, const CannyParams& params) {
  std::vector<SliceScore> scores;
  std::vector<MagnitudeImage> normalized;
  for (const auto& v : volumes) {
    const auto ratios = energy_ratio(v.slices);
    auto norm = normalize_volume_max(v.slices);
    for (std::size_t s = 0; s < v.slices.size(); ++s) {
      scores.push_back({v.volume_id, s, ratios[s], 0.0});
      normalized.push_back(std::move(norm[s]));
    }
  }
  parallel_for(static_cast<std::ptrdiff_t>(scores.size()), [&](std::ptrdiff_t i) {
    scores[static_cast<std::size_t>(i)].edge_density = edge_density(normalized[static_cast<std::size_t>(i)], params);
  });
  return scores;
}

CurationResult heuristic_select(const std::vector<SliceScore>& scores, const HeuristicThresholds& th) {
  CurationResult r;
  for (const auto& s : scores)
    if (s.energy_ratio > th.energy && s.edge_density > th.edge) r.entries.push_back({s.volume_id, s.slice_index, 1.0});
  std::sort(r.entries.begin(), r.entries.end(), [](const CurationEntry& a, const CurationEntry& b) {
    return std::tie(a.volume_id, a.slice_index) < std::tie(b.volume_id, b.slice_index);
  });
  r.params = {{"mode", "heuristic"}, {"energy_threshold", th.energy}, {"edge_threshold", th.edge}};
  return r;
}

CurationResult heuristic_filter(const DatasetManifest& manifest, const fs::path& recon_dir,
                                const HeuristicThresholds& th, std::vector<SliceScore>* scores_out) {
  std::vector<VolumeMagnitudes> volumes;
  for (const auto& id : manifest.volume_ids()) {
    const fs::path path = recon_dir / (id + ".h5");
    if (!fs::exists(path)) fail(ErrorCode::MissingArtifact, "no reconstruction for volume '" + id + "' at " + path.string());
    h5::ReconVolume rec = h5::load_recon(path);
    VolumeMagnitudes v{id, {}};
    for (const auto* r : manifest.volume(id)) {
      if (r->slice_index >= rec.images.size())
        fail(ErrorCode::MissingArtifact, "reconstruction " + path.string() + " lacks slice " + std::to_string(r->slice_index));
    }
    for (const auto& img : rec.images) v.slices.push_back({magnitude(img), Normalization::Raw});
    volumes.push_back(std::move(v));
  }
  auto scores = score_slices(volumes);
  // drop slices the manifest does not list
  std::erase_if(scores, [&](const SliceScore& s) { return manifest.find(s.volume_id, s.slice_index) == nullptr; });
  auto result = heuristic_select(scores, th);
  result.params["recon_dir"] = recon_dir.filename().string();
  if (scores_out) *scores_out = std::move(scores);
  return result;
}

}  // namespace kcurate
