#pragma once

#include <map>
#include <string>

#include "recoil/mlp.hpp"

namespace recoil {

// Everything a checkpoint needs besides the weights to run the policy
// against an environment: observation layout and action denormalization
// constants.
struct PolicyMeta {
  int frame_width{19};
  int history{0};
  bool trigger_obs{false};
  double max_rate_cmd{6.0};        // rad/s per unit action
  double thrust_delta_scale{0.0};  // N per unit action (mass * g)

  int observation_dim() const { return frame_width * (history + 1); }
};

struct Checkpoint {
  ActorCritic<float> policy;
  PolicyMeta meta;
  std::map<std::string, std::string> config_echo;
};

// Single JSON document: format version, architecture, row-major weight
// arrays, biases, log-std, denormalization constants, and the training
// config echo. Numeric arrays are text encoded at full precision, so a
// save/load round trip reproduces the network bit for bit.
void save_checkpoint(const std::string& path, const ActorCritic<float>& policy,
                     const PolicyMeta& meta,
                     const std::map<std::string, std::string>& config_echo);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace recoil
