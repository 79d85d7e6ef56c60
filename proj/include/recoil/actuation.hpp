#pragma once

#include <Eigen/Dense>

namespace recoil {

struct RotorParams {
  double thrust_coef{2.5e-5};  // N s^2 / rad^2
  double drag_coef{50.0};      // yaw torque per unit thrust
  double arm_length{0.28};     // m, rotor to geometric center
  double max_speed{800.0};     // rad/s

  // arm length projected onto the body x/y axes (cross layout)
  double arm_45() const { return arm_length * 0.7071067811865476; }
  void validate() const;
};

struct Wrench {
  double thrust{0.0};                          // N, along body z
  Eigen::Vector3d torque{Eigen::Vector3d::Zero()};  // N m, body frame
};

// Linear map between per-rotor thrusts and the (collective thrust, body
// torque) wrench, with its inverse cached for the per-step hot path.
class RotorMixer {
 public:
  explicit RotorMixer(const RotorParams& params);

  // Uni-directional rotors: per-rotor thrust c_f * omega_i^2, combined
  // through the 4x4 allocation matrix. Throws std::invalid_argument
  // ("rotor speed out of range") when any omega is outside [0, max_speed].
  Wrench rotor_speeds_to_wrench(const Eigen::Vector4d& omegas) const;

  struct Command {
    Eigen::Vector4d omegas;
    bool saturated{false};
  };

  // Inverse allocation: solve for per-rotor thrusts, clamp each to the
  // feasible range [0, c_f * max_speed^2], convert back to rotor speeds.
  // Exact round trip when no clamping occurs.
  Command wrench_to_rotor_speeds(const Wrench& w) const;

  const Eigen::Matrix4d& allocation() const { return alloc_; }
  const RotorParams& params() const { return params_; }

 private:
  RotorParams params_;
  Eigen::Matrix4d alloc_;
  Eigen::Matrix4d alloc_inv_;
  double max_rotor_thrust_;
};

}  // namespace recoil
