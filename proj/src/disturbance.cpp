#include "recoil/disturbance.hpp"

#include <stdexcept>

namespace recoil {

void DisturbanceParams::validate() const {
  if (!(force_x_min <= force_x_max))
    throw std::invalid_argument("disturbance.force_x_min must be <= force_x_max");
  if (!(trigger_duration > 0.0))
    throw std::invalid_argument("disturbance.trigger_duration must be > 0");
  if (!(impulse_duration > 0.0))
    throw std::invalid_argument("disturbance.impulse_duration must be > 0");
  if (!(noise_std.array() >= 0.0).all())
    throw std::invalid_argument("disturbance.noise_std must be >= 0");
}

DisturbanceEvent sample_event(const DisturbanceParams& params,
                              double episode_length,
                              RandomStream& rng) {
  params.validate();
  const double latest_start = episode_length - kRecoveryMargin -
                              params.impulse_duration - params.trigger_duration -
                              kTriggerJitterBound;
  if (latest_start < kMinTriggerStart) {
    throw std::runtime_error("schedule infeasible: episode too short for trigger and recovery");
  }

  DisturbanceEvent event;
  event.peak_force = Eigen::Vector3d(rng.uniform(params.force_x_min, params.force_x_max), 0.0, 0.0);
  event.jitter = rng.uniform(-kTriggerJitterBound, kTriggerJitterBound);
  event.trigger_start = rng.uniform(kMinTriggerStart, latest_start);
  event.trigger_duration = params.trigger_duration;
  event.impulse_start = event.trigger_start + event.trigger_duration - event.jitter;
  event.impulse_duration = params.impulse_duration;
  event.noise_std = params.noise_std;
  return event;
}

int trigger_value(const DisturbanceEvent& event, double t) {
  return (t >= event.trigger_start && t < event.trigger_start + event.trigger_duration) ? 1 : 0;
}

Eigen::Vector3d disturbance_force(const DisturbanceEvent& event, double t,
                                  RandomStream& rng) {
  if (t < event.impulse_start || t >= event.impulse_start + event.impulse_duration) {
    return Eigen::Vector3d::Zero();
  }
  Eigen::Vector3d noise;
  for (int i = 0; i < 3; ++i) noise[i] = rng.normal();
  return event.peak_force + noise.cwiseProduct(event.noise_std);
}

}  // namespace recoil
