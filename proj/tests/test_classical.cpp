#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vascan/classical.hpp"
#include "vascan/common.hpp"
#include "vascan/compound.hpp"

using namespace vascan;

namespace {

// Dark circular lumen on a brighter speckled background, with a Doppler
// blob sitting inside the lumen.
struct SyntheticVessel {
  DuplexFrame frame;
  ImageGrid truth;
};

SyntheticVessel make_vessel_frame(std::uint64_t seed, double cx, double cy,
                                  double radius_px) {
  const int res = 96;
  SyntheticVessel out;
  out.frame.bmode = ImageGrid::zeros(res, res, 0.3);
  out.frame.doppler = ImageGrid::zeros(res, res, 0.3);
  out.truth = ImageGrid::zeros(res, res, 0.3);
  std::mt19937_64 rng(seed);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      const double d = std::hypot(c - cx, r - cy);
      double v = 0.55 + 0.1 * (uniform01(rng) - 0.5);
      if (d < radius_px) {
        v = 0.04 + 0.02 * uniform01(rng);
        out.truth.data(r, c) = 1.0f;
      }
      out.frame.bmode.data(r, c) = static_cast<float>(v);
      if (d < 0.6 * radius_px) out.frame.doppler.data(r, c) = 1.0f;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("a clean vessel is segmented with high overlap") {
  const SyntheticVessel v = make_vessel_frame(1, 48.0, 40.0, 12.0);
  const ImageGrid mask = classical_segment(v.frame);
  CHECK(dice_score(mask, v.truth) >= 0.8);
}

TEST_CASE("overlap holds across positions and sizes") {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 10; ++round) {
    const double cx = uniform(rng, 30.0, 66.0);
    const double cy = uniform(rng, 30.0, 66.0);
    const double radius = uniform(rng, 8.0, 14.0);
    const SyntheticVessel v = make_vessel_frame(100 + round, cx, cy, radius);
    const ImageGrid mask = classical_segment(v.frame);
    CAPTURE(round);
    CHECK(dice_score(mask, v.truth) >= 0.7);
  }
}

TEST_CASE("no doppler proposals mean an empty mask") {
  SyntheticVessel v = make_vessel_frame(3, 48.0, 48.0, 12.0);
  v.frame.doppler.data.setZero();
  const ImageGrid mask = classical_segment(v.frame);
  CHECK(mask.data.sum() == 0.0f);
  CHECK(mask.height() == 96);
  CHECK(mask.width() == 96);
}

TEST_CASE("two vessels produce two segmented regions") {
  SyntheticVessel a = make_vessel_frame(4, 28.0, 48.0, 10.0);
  const SyntheticVessel b = make_vessel_frame(5, 70.0, 48.0, 10.0);
  // Merge the second vessel into the first frame.
  for (int r = 0; r < 96; ++r) {
    for (int c = 0; c < 96; ++c) {
      if (b.truth.data(r, c) > 0.5f) {
        a.frame.bmode.data(r, c) = b.frame.bmode.data(r, c);
        a.truth.data(r, c) = 1.0f;
      }
      if (b.frame.doppler.data(r, c) > 0.5f) a.frame.doppler.data(r, c) = 1.0f;
    }
  }
  const ImageGrid mask = classical_segment(a.frame);
  CHECK(dice_score(mask, a.truth) >= 0.7);
  TrackerParams tp;
  CHECK(extract_centers(mask, tp).size() == 2);
}

TEST_CASE("segmentation is deterministic") {
  const SyntheticVessel v = make_vessel_frame(6, 50.0, 44.0, 11.0);
  const ImageGrid m1 = classical_segment(v.frame);
  const ImageGrid m2 = classical_segment(v.frame);
  CHECK(m1.data.isApprox(m2.data));
}

TEST_CASE("mismatched channel dimensions are rejected") {
  DuplexFrame frame;
  frame.bmode = ImageGrid::zeros(32, 32, 0.3);
  frame.doppler = ImageGrid::zeros(16, 16, 0.3);
  CHECK_THROWS_AS(classical_segment(frame), std::invalid_argument);
}
