#include "vascan/control.hpp"

#include <cmath>
#include <stdexcept>

#include "vascan/common.hpp"

namespace vascan {

ImpedanceParams ImpedanceParams::defaults() {
  ImpedanceParams p;
  p.desired_wrench = Vector6d::Zero();
  p.desired_wrench(2) = 1.0;  // 1 N along the probe centerline
  Vector6d k, d, m;
  k << 300.0, 300.0, 200.0, 10.0, 10.0, 10.0;
  d << 5.0, 5.0, 5.0, 0.5, 0.5, 0.5;
  m << 1.0, 1.0, 1.0, 0.1, 0.1, 0.1;
  p.stiffness = k.asDiagonal();
  p.damping = d.asDiagonal();
  p.inertia = m.asDiagonal();
  return p;
}

static void check_gain(const Matrix6d& m, const char* name) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(name) + " has non-finite entries");
  }
  if (!m.isApprox(m.transpose(), 1e-9)) {
    throw std::invalid_argument(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(m);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument(std::string(name) +
                                " is not positive semidefinite");
  }
}

void validate(const ImpedanceParams& params) {
  if (!params.desired_wrench.allFinite()) {
    throw std::invalid_argument("desired wrench has non-finite entries");
  }
  check_gain(params.stiffness, "stiffness");
  check_gain(params.damping, "damping");
  check_gain(params.inertia, "inertia");
}

Eigen::VectorXd impedance_torque(
    const Eigen::Matrix<double, 6, Eigen::Dynamic>& jacobian,
    const ImpedanceParams& params, const Vector6d& error,
    const Vector6d& error_rate, const Vector6d& error_accel) {
  validate(params);
  if (!jacobian.allFinite() || !error.allFinite() ||
      !error_rate.allFinite() || !error_accel.allFinite()) {
    throw std::invalid_argument("non-finite impedance input");
  }
  const Vector6d wrench = params.desired_wrench + params.stiffness * error +
                          params.damping * error_rate +
                          params.inertia * error_accel;
  return jacobian.transpose() * wrench;
}

double contact_indentation_mm(double normal_force_n, double stiffness_n_per_m) {
  if (stiffness_n_per_m <= 0.0) {
    throw std::invalid_argument("contact stiffness must be positive");
  }
  return normal_force_n / stiffness_n_per_m * 1000.0;
}

void validate(const SweepPlan& plan) {
  validate(plan.start);
  validate(plan.end);
  if (plan.speed_mm_s <= 0.0) {
    throw std::invalid_argument("sweep speed must be positive");
  }
  if ((plan.end.position - plan.start.position).norm() < 1e-9) {
    throw std::invalid_argument("sweep start and end coincide");
  }
}

SweepExecutor::SweepExecutor(const SweepPlan& plan,
                             const ImpedanceParams& impedance,
                             double slew_rate_deg_s, double safety_limit_deg)
    : plan_(plan),
      tilt_deg_(plan.start.out_of_plane_deg),
      target_tilt_deg_(plan.start.out_of_plane_deg),
      slew_rate_deg_s_(slew_rate_deg_s),
      safety_limit_deg_(safety_limit_deg) {
  validate(plan);
  validate(impedance);
  const Eigen::Vector3d delta = plan.end.position - plan.start.position;
  length_mm_ = delta.norm();
  direction_ = delta / length_mm_;
  indentation_mm_ = contact_indentation_mm(impedance.desired_wrench(2),
                                           impedance.stiffness(2, 2));
}

ProbePose SweepExecutor::step(double dt_s,
                              const std::optional<OrientationCommand>& command,
                              SweepMode mode) {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) {
    throw std::invalid_argument("step requires a positive dt");
  }
  if (command) {
    if (std::abs(command->target_tilt_deg) > safety_limit_deg_ + 1e-9) {
      throw std::invalid_argument("orientation command exceeds safety limit");
    }
    target_tilt_deg_ = command->target_tilt_deg;
  }
  const double max_delta = slew_rate_deg_s_ * dt_s;
  const double want = target_tilt_deg_ - tilt_deg_;
  tilt_deg_ += std::clamp(want, -max_delta, max_delta);
  if (mode == SweepMode::kImpedance) {
    progress_mm_ = std::min(progress_mm_ + plan_.speed_mm_s * dt_s, length_mm_);
  }
  return pose();
}

ProbePose SweepExecutor::pose() const {
  ProbePose p = make_pose(plan_.start.position + progress_mm_ * direction_,
                          tilt_deg_);
  p.position += indentation_mm_ * depth_axis(p);
  return p;
}

}  // namespace vascan
