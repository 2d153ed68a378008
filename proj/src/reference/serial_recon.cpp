#include "kcurate/recon_detail.hpp"
#include "kcurate/reference.hpp"

namespace kcurate::serial {

VolumeRecon reconstruct_volume(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask) {
  VolumeRecon out = detail::prepare(vol, opts, mask);
  for (std::size_t s = 0; s < vol.slices(); ++s) detail::reconstruct_slice(vol, s, opts, mask, out);
  return out;
}

}  // namespace kcurate::serial
