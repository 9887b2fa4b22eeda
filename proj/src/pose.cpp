#include "vascan/pose.hpp"

#include <cmath>
#include <stdexcept>

#include "vascan/common.hpp"

namespace vascan {

ProbePose make_pose(const Eigen::Vector3d& position_mm, double tilt_deg) {
  ProbePose pose;
  pose.position = position_mm;
  pose.orientation = Eigen::Quaterniond(
      Eigen::AngleAxisd(deg_to_rad(tilt_deg), Eigen::Vector3d::UnitY()));
  pose.out_of_plane_deg = tilt_deg;
  return pose;
}

void validate(const ProbePose& pose) {
  if (!pose.position.allFinite()) {
    throw std::invalid_argument("pose position is not finite");
  }
  if (std::abs(pose.orientation.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("pose quaternion is not unit length");
  }
  // A pure tilt about y keeps x and z quaternion components at zero; the
  // signed angle is then recoverable from (w, y) alone.
  const double tilt_from_q =
      rad_to_deg(2.0 * std::atan2(pose.orientation.y(), pose.orientation.w()));
  if (std::abs(tilt_from_q - pose.out_of_plane_deg) > 1e-6) {
    throw std::invalid_argument("stored tilt disagrees with quaternion");
  }
}

Eigen::Vector3d lateral_axis(const ProbePose& pose) {
  return pose.orientation * Eigen::Vector3d::UnitY();
}

Eigen::Vector3d depth_axis(const ProbePose& pose) {
  return pose.orientation * Eigen::Vector3d::UnitZ();
}

Eigen::Vector3d plane_normal(const ProbePose& pose) {
  return pose.orientation * Eigen::Vector3d::UnitX();
}

Eigen::Vector3d image_point(const ProbePose& pose, double u_px, double v_px,
                            double spacing_mm, int width_px) {
  const double u_centred = u_px - 0.5 * (width_px - 1);
  return pose.position + u_centred * spacing_mm * lateral_axis(pose) +
         v_px * spacing_mm * depth_axis(pose);
}

}  // namespace vascan
