#pragma once

#include <Eigen/Dense>

namespace recoil {

struct InertialParams {
  double mass{3.1};                                  // kg
  Eigen::Vector3d inertia_diag{0.039, 0.039, 0.061}; // kg m^2, principal axes
  double gravity{9.81};                              // m/s^2

  void validate() const;  // throws std::invalid_argument naming the field
};

// Vehicle state. The rotation matrix maps body frame to world frame; the
// angular velocity is expressed in the body frame.
struct RigidBodyState {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d angular_velocity{Eigen::Vector3d::Zero()};

  bool finite() const;
};

// Time derivative of RigidBodyState; same member layout.
struct RigidBodyDerivative {
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
  Eigen::Matrix3d rotation;
  Eigen::Vector3d angular_velocity;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Newton-Euler equations of motion. The collective thrust acts along the
// body z axis, the disturbance force is given in the body frame, gravity
// pulls along -z in the world frame.
RigidBodyDerivative dynamics_derivative(const RigidBodyState& state,
                                        double thrust,
                                        const Eigen::Vector3d& torque,
                                        const Eigen::Vector3d& disturbance_force,
                                        const InertialParams& params);

// Nearest rotation matrix with determinant +1 (polar decomposition).
// Idempotent; throws std::invalid_argument("degenerate rotation") when
// det(r) <= 0.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

// Classical 4th-order Runge-Kutta step holding the inputs constant over dt.
// The rotation matrix is renormalized after the step.
RigidBodyState integrate_step(const RigidBodyState& state,
                              double thrust,
                              const Eigen::Vector3d& torque,
                              const Eigen::Vector3d& disturbance_force,
                              const InertialParams& params,
                              double dt);

}  // namespace recoil
