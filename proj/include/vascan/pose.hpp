#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace vascan {

// Probe pose in scene coordinates. Millimetres throughout. The canonical
// orientation (identity quaternion) has the image lateral axis along +y and
// the image depth axis along +z; the sweep direction is +x. Out-of-plane
// tilt is a rotation about the lateral (y) axis and is stored redundantly in
// degrees next to the quaternion so downstream consumers never have to
// recover a signed angle from it.
struct ProbePose {
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  Eigen::Quaterniond orientation{1.0, 0.0, 0.0, 0.0};
  double out_of_plane_deg = 0.0;
};

ProbePose make_pose(const Eigen::Vector3d& position_mm, double tilt_deg);

// Throws std::invalid_argument if the quaternion is not unit length or if
// the stored tilt disagrees with the quaternion by more than 1e-6 degrees.
void validate(const ProbePose& pose);

Eigen::Vector3d lateral_axis(const ProbePose& pose);
Eigen::Vector3d depth_axis(const ProbePose& pose);
Eigen::Vector3d plane_normal(const ProbePose& pose);

// Scene-space position of an image pixel. u is the column (lateral,
// centred), v is the row (depth, starting at the transducer face).
Eigen::Vector3d image_point(const ProbePose& pose, double u_px, double v_px,
                            double spacing_mm, int width_px);

}  // namespace vascan
