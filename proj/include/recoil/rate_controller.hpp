#pragma once

#include <Eigen/Dense>

#include "recoil/actuation.hpp"
#include "recoil/rigid_body.hpp"

namespace recoil {

struct RateCtrlParams {
  Eigen::Vector3d kp{20.0, 20.0, 8.0};  // 1/s, body-rate proportional gains
  double max_tilt_comp{1.0471975511965976};  // rad (60 deg), gravity comp cutoff

  void validate() const;
};

// Agent command after denormalization: thrust delta around hover plus the
// desired body rates about x and y.
struct RateCommand {
  double thrust_delta{0.0};  // N, on top of gravity compensation
  double rate_x{0.0};        // rad/s
  double rate_y{0.0};        // rad/s
};

// Inner-loop controller. Adds tilt-aware gravity compensation to the
// commanded thrust, tracks body rates with a P law plus gyroscopic
// feedforward, and allocates the wrench to rotor speeds (saturating).
RotorMixer::Command compute_rotor_commands(const RateCommand& u,
                                           double yaw_rate_ref,
                                           const RigidBodyState& state,
                                           const InertialParams& inertial,
                                           const RotorMixer& mixer,
                                           const RateCtrlParams& ctrl);

}  // namespace recoil
