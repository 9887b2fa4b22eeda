#pragma once

#include <random>
#include <vector>

#include "vascan/imaging.hpp"

namespace vascan {

// One sampled geometric transform, shared by a whole sequence. Applied as
// horizontal flip, then scale and rotation about the image centre, then
// shift; sampling is by inverse mapping with zero fill outside the frame.
struct AugmentParams {
  double shift_h_frac = 0.0;  // horizontal shift as a fraction of width
  double shift_v_frac = 0.0;  // vertical shift as a fraction of height
  double rot_deg = 0.0;
  double scale = 1.0;
  bool hflip = false;

  static AugmentParams identity() { return {}; }
};

// Draws shift in [-1%, 1%], rotation in [-15, 15] degrees, scale in
// [80%, 120%], flip with probability one half, in that fixed order.
AugmentParams sample_augment(std::mt19937_64& rng);

// kNearest keeps masks binary and makes a pure flip an exact involution.
ImageGrid warp_image(const ImageGrid& img, const AugmentParams& params,
                     Resample mode);

// Applies the same transform to every frame: bmode bilinear, doppler and
// ground-truth masks nearest.
void augment_sequence(std::vector<ImageGrid>& bmode,
                      std::vector<ImageGrid>& doppler,
                      std::vector<ImageGrid>& masks,
                      const AugmentParams& params);

}  // namespace vascan
