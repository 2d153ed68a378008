#include "kcurate/reference.hpp"

namespace kcurate::serial {

std::vector<SliceScore> score_slices(const std::vector<VolumeMagnitudes>& volumes, const CannyParams& params) {
  std::vector<SliceScore> scores;
  for (const auto& v : volumes) {
    const auto ratios = energy_ratio(v.slices);
    const auto norm = normalize_volume_max(v.slices);
    for (std::size_t s = 0; s < v.slices.size(); ++s)
      scores.push_back({v.volume_id, s, ratios[s], edge_density(norm[s], params)});
  }
  return scores;
}

}  // namespace kcurate::serial
