#pragma once

#include "vascan/imaging.hpp"
#include "vascan/tracker.hpp"

namespace vascan {

struct ClassicalParams {
  TrackerParams proposal;       // doppler components that count as seeds
  double window_radii = 3.0;    // search window half-size, in proposal radii
  double threshold_blend = 0.35;  // cut between lumen and surround intensity
  double max_region_radii = 2.5;  // flood larger than this is a runaway
};

// Untrained baseline: each Doppler component proposes a lumen seed, the
// dark region around the seed is grown by intensity threshold and replaced
// with its moment-fit ellipse. No Doppler proposals mean an empty mask.
ImageGrid classical_segment(const DuplexFrame& frame,
                            const ClassicalParams& params = {});

}  // namespace vascan
