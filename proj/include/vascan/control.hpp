#pragma once

#include <Eigen/Dense>
#include <optional>

#include "vascan/pose.hpp"

namespace vascan {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Cartesian impedance gains, SI units (m, N, N/m, N s/m, kg). The task
// frame puts the probe centerline on the z (index 2) axis; the default
// desired wrench presses 1 N along it against 200 N/m of stiffness.
struct ImpedanceParams {
  Vector6d desired_wrench;
  Matrix6d stiffness;
  Matrix6d damping;
  Matrix6d inertia;

  static ImpedanceParams defaults();
};

// Throws std::invalid_argument if a gain matrix is asymmetric or has a
// negative eigenvalue, or if any entry is non-finite.
void validate(const ImpedanceParams& params);

// Joint torques tau = J^T (F_d + K e + D e_dot + M e_ddot). The Jacobian
// maps joint velocities to the 6-dof task twist; any column count works.
Eigen::VectorXd impedance_torque(
    const Eigen::Matrix<double, 6, Eigen::Dynamic>& jacobian,
    const ImpedanceParams& params, const Vector6d& error,
    const Vector6d& error_rate, const Vector6d& error_accel);

// Static spring equilibrium of the probe against the virtual skin plane.
double contact_indentation_mm(double normal_force_n, double stiffness_n_per_m);

struct OrientationCommand {
  double target_tilt_deg = 0.0;  // absolute out-of-plane tilt
};

enum class SweepMode { kImpedance, kPositionHold };

struct SweepPlan {
  ProbePose start;
  ProbePose end;
  double speed_mm_s = 10.0;
};

void validate(const SweepPlan& plan);

// Kinematic executor for a straight skin-surface sweep. Advances along the
// start-to-end segment in kImpedance mode and freezes translation in
// kPositionHold; out-of-plane tilt slews toward the last accepted command
// at a fixed rate. The pose it reports includes the constant contact
// indentation along the probe depth axis.
class SweepExecutor {
 public:
  SweepExecutor(const SweepPlan& plan, const ImpedanceParams& impedance,
                double slew_rate_deg_s = 20.0,
                double safety_limit_deg = 20.0);

  // Throws std::invalid_argument if the command exceeds the safety limit.
  ProbePose step(double dt_s, const std::optional<OrientationCommand>& command,
                 SweepMode mode);

  ProbePose pose() const;
  bool finished() const { return progress_mm_ >= length_mm_; }
  double progress_mm() const { return progress_mm_; }
  double tilt_deg() const { return tilt_deg_; }

 private:
  SweepPlan plan_;
  Eigen::Vector3d direction_;
  double length_mm_ = 0.0;
  double progress_mm_ = 0.0;
  double tilt_deg_ = 0.0;
  double target_tilt_deg_ = 0.0;
  double slew_rate_deg_s_;
  double safety_limit_deg_;
  double indentation_mm_ = 0.0;
};

}  // namespace vascan
