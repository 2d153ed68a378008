#pragma once

#include "kcurate/recon.hpp"

namespace kcurate::detail {

VolumeRecon prepare(const KSpaceVolume& vol, const ReconOptions& opts, const UndersamplingMask* mask);
void reconstruct_slice(const KSpaceVolume& vol, std::size_t s, const ReconOptions& opts,
                       const UndersamplingMask* mask, VolumeRecon& out);

}  // namespace kcurate::detail
