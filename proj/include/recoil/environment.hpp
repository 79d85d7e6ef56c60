#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "recoil/actuation.hpp"
#include "recoil/disturbance.hpp"
#include "recoil/rate_controller.hpp"
#include "recoil/rigid_body.hpp"
#include "recoil/rng.hpp"

namespace recoil {

struct EnvConfig {
  Eigen::Vector3d reference_position{Eigen::Vector3d::Zero()};
  int episode_steps{1000};
  double dt{0.01};
  int history{0};  // extra past frames stacked into the observation

  // reward
  double reward_slope{0.5};        // 1/m, slope of the per-axis position term
  double effort_weight{0.01};      // weight on the squared action norm
  double crash_penalty{10.0};      // positive; applied as -penalty
  double max_position_error{3.0};  // m, episode terminates at or beyond this
  double discount{0.99};

  // initial-state randomization (uniform, symmetric per axis)
  double init_pos_range{1.0};   // m
  double init_att_range{0.2};   // rad
  double init_vel_range{0.5};   // m/s

  bool enable_disturbance{true};
  bool enable_trigger_obs{true};

  // action denormalization: action[0] in [-1,1] maps to a thrust delta in
  // [-mass*g, +mass*g]; actions[1..2] map to body rates in
  // [-max_rate_cmd, +max_rate_cmd]
  double max_rate_cmd{6.0};  // rad/s

  InertialParams inertial;
  RotorParams rotor;
  RateCtrlParams rate_ctrl;
  DisturbanceParams disturbance;

  static constexpr int kFrameWidth = 19;  // [e_p(3) v(3) R(9) w(3) o_t(1)]
  int observation_dim() const { return kFrameWidth * (history + 1); }

  void validate() const;
};

struct StepInfo {
  Eigen::Vector3d position_error{Eigen::Vector3d::Zero()};
  Eigen::Vector3d applied_force{Eigen::Vector3d::Zero()};  // disturbance, body frame
  int trigger{0};
  bool saturated{false};
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward{0.0};
  bool terminated{false};
  StepInfo info;
};

// One row of a recorded trajectory; post-step time and state, with the
// action that produced them.
struct StepRecord {
  int step{0};
  double t{0.0};
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d position_error{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  Eigen::Vector3d angular_velocity{Eigen::Vector3d::Zero()};
  Eigen::Vector3d action{Eigen::Vector3d::Zero()};  // normalized, clipped
  double cmd_thrust{0.0};  // N, denormalized thrust delta
  double cmd_rate_x{0.0};  // rad/s
  double cmd_rate_y{0.0};  // rad/s
  int trigger{0};
  double force_x{0.0};  // applied disturbance force, body x
  double reward{0.0};
};

// Total reward of one step: product-of-axes position term squared, minus the
// weighted squared action norm, or the crash penalty outside the error limit.
double compute_reward(const Eigen::Vector3d& position_error,
                      const Eigen::Vector3d& action, const EnvConfig& config);

// Single episodic environment instance. Owns its state and two random
// streams (resets/events and disturbance noise), so independent instances
// can run concurrently.
class Env {
 public:
  Env(const EnvConfig& config, std::uint64_t seed);

  // Start a new episode; returns the initial observation (history back-filled
  // with the initial frame).
  Eigen::VectorXd reset();

  // Advance one control step. The action is clipped to [-1,1]^3. Throws
  // std::logic_error("episode finished") when called on a finished episode.
  StepResult step(const Eigen::Vector3d& action);

  bool finished() const { return finished_; }
  int steps_taken() const { return step_count_; }
  double time() const { return step_count_ * config_.dt; }
  const RigidBodyState& state() const { return state_; }
  const std::optional<DisturbanceEvent>& event() const { return event_; }
  const EnvConfig& config() const { return config_; }

  void set_record_hook(std::function<void(const StepRecord&)> hook) {
    record_hook_ = std::move(hook);
  }

 private:
  Eigen::VectorXd frame(int trigger) const;
  Eigen::VectorXd assemble_observation() const;

  EnvConfig config_;
  RotorMixer mixer_;
  RandomStream rng_;        // reset draws and event schedule
  RandomStream noise_rng_;  // disturbance noise
  RigidBodyState state_;
  std::optional<DisturbanceEvent> event_;
  int step_count_{0};
  bool finished_{true};  // reset() starts the first episode
  std::vector<Eigen::VectorXd> frames_;  // ring of history+1 frames
  int frame_head_{0};
  std::function<void(const StepRecord&)> record_hook_;
};

// Batch facade stepping many independent environments with per-instance
// random streams derived from one base seed. Finished episodes reset
// automatically; the observation slot then holds the next episode's first
// frame stack. Stepping with threads > 1 is bitwise identical to serial
// stepping since instances share no state.
class VecEnv {
 public:
  VecEnv(const EnvConfig& config, int num_envs, std::uint64_t base_seed,
         int threads = 1);

  // Resets every environment and fills the observation matrix.
  void reset_all();

  // actions: num_envs x 3, each row in [-1,1]^3
  void step(const Eigen::MatrixXd& actions);

  const Eigen::MatrixXd& observations() const { return observations_; }
  const Eigen::VectorXd& rewards() const { return rewards_; }
  const std::vector<std::uint8_t>& terminations() const { return terminations_; }
  // episode stats of episodes that finished in the latest step() call
  const std::vector<std::pair<double, int>>& finished_episodes() const {
    return finished_episodes_;
  }

  Env& env(int i) { return *envs_[i]; }
  int size() const { return static_cast<int>(envs_.size()); }
  int observation_dim() const { return static_cast<int>(observations_.cols()); }

 private:
  void for_each_env(const std::function<void(int)>& body);

  std::vector<std::unique_ptr<Env>> envs_;
  int threads_;
  Eigen::MatrixXd observations_;  // num_envs x obs_dim
  Eigen::VectorXd rewards_;
  std::vector<std::uint8_t> terminations_;
  std::vector<double> episode_returns_;
  std::vector<int> episode_lengths_;
  std::vector<std::pair<double, int>> finished_episodes_;
};

}  // namespace recoil
