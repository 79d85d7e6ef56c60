#include "recoil/actuation.hpp"

#include <cmath>
#include <stdexcept>

namespace recoil {

void RotorParams::validate() const {
  if (!(thrust_coef > 0.0)) throw std::invalid_argument("rotor.thrust_coef must be > 0");
  if (!(arm_length > 0.0)) throw std::invalid_argument("rotor.arm_length must be > 0");
  if (!(max_speed > 0.0)) throw std::invalid_argument("rotor.max_speed must be > 0");
}

RotorMixer::RotorMixer(const RotorParams& params) : params_(params) {
  params_.validate();
  const double d45 = params_.arm_45();
  const double ct = params_.drag_coef;
  alloc_ << 1.0, 1.0, 1.0, 1.0,
            d45, d45, -d45, -d45,
            -d45, d45, d45, -d45,
            ct, -ct, ct, -ct;
  alloc_inv_ = alloc_.inverse();
  max_rotor_thrust_ = params_.thrust_coef * params_.max_speed * params_.max_speed;
}

Wrench RotorMixer::rotor_speeds_to_wrench(const Eigen::Vector4d& omegas) const {
  for (int i = 0; i < 4; ++i) {
    if (!(omegas[i] >= 0.0 && omegas[i] <= params_.max_speed)) {
      throw std::invalid_argument("rotor speed out of range");
    }
  }
  const Eigen::Vector4d thrusts = params_.thrust_coef * omegas.array().square().matrix();
  const Eigen::Vector4d w = alloc_ * thrusts;
  Wrench out;
  out.thrust = w[0];
  out.torque = w.tail<3>();
  return out;
}

RotorMixer::Command RotorMixer::wrench_to_rotor_speeds(const Wrench& w) const {
  Eigen::Vector4d target;
  target << w.thrust, w.torque.x(), w.torque.y(), w.torque.z();
  Eigen::Vector4d thrusts = alloc_inv_ * target;

  Command cmd;
  for (int i = 0; i < 4; ++i) {
    double t = thrusts[i];
    if (t < 0.0) {
      t = 0.0;
      cmd.saturated = true;
    } else if (t > max_rotor_thrust_) {
      t = max_rotor_thrust_;
      cmd.saturated = true;
    }
    cmd.omegas[i] = std::min(std::sqrt(t / params_.thrust_coef), params_.max_speed);
  }
  return cmd;
}

}  // namespace recoil
