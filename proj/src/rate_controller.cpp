#include "recoil/rate_controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recoil {

void RateCtrlParams::validate() const {
  if (!(kp.array() > 0.0).all())
    throw std::invalid_argument("rate_ctrl.kp must be > 0 componentwise");
  if (!(max_tilt_comp > 0.0 && max_tilt_comp < 1.5707963267948966))
    throw std::invalid_argument("rate_ctrl.max_tilt_comp must be in (0, pi/2)");
}

RotorMixer::Command compute_rotor_commands(const RateCommand& u,
                                           double yaw_rate_ref,
                                           const RigidBodyState& state,
                                           const InertialParams& inertial,
                                           const RotorMixer& mixer,
                                           const RateCtrlParams& ctrl) {
  // cos of the angle between body z and world z; clamped away from zero so
  // the compensation stays bounded for any attitude, inverted included
  const double cos_tilt = state.rotation(2, 2);
  const double comp_divisor = std::max(cos_tilt, std::cos(ctrl.max_tilt_comp));
  const double hover_comp = inertial.mass * inertial.gravity / comp_divisor;

  const Eigen::Vector3d rate_ref(u.rate_x, u.rate_y, yaw_rate_ref);
  const Eigen::Vector3d& w = state.angular_velocity;
  const Eigen::Vector3d inertia_w = inertial.inertia_diag.cwiseProduct(w);

  Wrench wrench;
  wrench.thrust = u.thrust_delta + hover_comp;
  wrench.torque =
      inertial.inertia_diag.cwiseProduct(ctrl.kp.cwiseProduct(rate_ref - w)) + w.cross(inertia_w);
  return mixer.wrench_to_rotor_speeds(wrench);
}

}  // namespace recoil
