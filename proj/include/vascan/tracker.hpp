#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vascan/imaging.hpp"

namespace vascan {

// One detected colour-flow patch: min-enclosing-circle centre of an
// 8-connected component of the Doppler mask, in pixel coordinates.
struct FlowContour {
  Eigen::Vector2d center_px{0.0, 0.0};  // (x, y) = (col, row)
  double radius_px = 0.0;
  double radius_mm = 0.0;
  int pixel_count = 0;
};

enum class CenterLabel : std::uint8_t { kNew, kCopied };

struct TrackPoint {
  Eigen::Vector2d center_px{0.0, 0.0};
  CenterLabel label = CenterLabel::kNew;
};

struct TrackObject {
  int id = 0;
  int created_at_frame = 0;
  std::vector<TrackPoint> history;  // one entry per frame since creation
};

struct TrackerParams {
  double min_radius_mm = 1.2;      // patches at or below this are discarded
  double max_match_dist_px = 30.0;  // T_d
};

struct TrackerState {
  std::vector<TrackObject> objects;  // in creation order, never removed
  int frame_count = 0;
  int next_id = 0;
};

struct MinCircle {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 0.0;
};

// Smallest circle containing all points. Throws on an empty set.
MinCircle min_enclosing_circle(const std::vector<Eigen::Vector2d>& points);

// Contours in scanline order of each component's first pixel. Components
// whose enclosing radius is <= min_radius_mm are dropped.
std::vector<FlowContour> extract_centers(const ImageGrid& doppler,
                                         const TrackerParams& params);

std::vector<double> center_distances(const Eigen::Vector2d& previous_px,
                                     const std::vector<FlowContour>& centers);

// One tracking step. Every existing object matches the nearest current
// centre: within max_match_dist_px the centre is appended flagged kNew,
// otherwise the object's previous centre is appended flagged kCopied. A
// centre may satisfy several objects; centres claimed by no object spawn
// new single-entry objects.
void update_tracker(TrackerState& state, const std::vector<FlowContour>& centers,
                    const TrackerParams& params);

}  // namespace vascan
