#pragma once

#include <Eigen/Dense>

#include "recoil/rng.hpp"

namespace recoil {

struct DisturbanceParams {
  double force_x_min{-1050.0};  // N, body frame x
  double force_x_max{-950.0};
  double trigger_duration{0.5};  // s, warning pulse length
  double impulse_duration{0.01}; // s
  Eigen::Vector3d noise_std{25.0, 0.0, 0.0};  // N, per-axis

  void validate() const;
};

// One scheduled impulse with its warning pulse. The impulse lands at
// trigger_start + trigger_duration - jitter; the jitter models the
// uncertainty between the warning and the shot.
struct DisturbanceEvent {
  double trigger_start{0.0};
  double trigger_duration{0.0};
  double jitter{0.0};
  double impulse_start{0.0};
  double impulse_duration{0.0};
  Eigen::Vector3d peak_force{Eigen::Vector3d::Zero()};  // body frame
  Eigen::Vector3d noise_std{Eigen::Vector3d::Zero()};   // N, per-axis
};

// Jitter between warning end and impulse, uniform on [-bound, bound].
inline constexpr double kTriggerJitterBound = 0.05;  // s

// Earliest allowed trigger start; gives the vehicle time to settle after
// the episode starts.
inline constexpr double kMinTriggerStart = 1.0;  // s

// Time reserved after the impulse for recovery within the episode.
inline constexpr double kRecoveryMargin = 3.0;  // s

// Draw one event: peak force x, jitter, then trigger start, uniformly.
// Deterministic for a given stream state. Throws std::runtime_error
// ("schedule infeasible") when the episode cannot fit the event.
DisturbanceEvent sample_event(const DisturbanceParams& params,
                              double episode_length,
                              RandomStream& rng);

// Binary warning signal: 1 on [trigger_start, trigger_start + T_t), else 0.
int trigger_value(const DisturbanceEvent& event, double t);

// Peak force plus per-axis Gaussian noise while the impulse is active
// (half-open window), zero otherwise.
Eigen::Vector3d disturbance_force(const DisturbanceEvent& event, double t,
                                  RandomStream& rng);

}  // namespace recoil
