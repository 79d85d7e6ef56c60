#include "recoil/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace recoil {

void EnvConfig::validate() const {
  if (!(episode_steps > 0)) throw std::invalid_argument("env.episode_steps must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("env.dt must be > 0");
  if (history < 0) throw std::invalid_argument("env.history must be >= 0");
  if (!(reward_slope > 0.0)) throw std::invalid_argument("env.reward_slope must be > 0");
  if (effort_weight < 0.0) throw std::invalid_argument("env.effort_weight must be >= 0");
  if (crash_penalty < 0.0) throw std::invalid_argument("env.crash_penalty must be >= 0");
  if (!(max_position_error > 0.0))
    throw std::invalid_argument("env.max_position_error must be > 0");
  if (!(discount >= 0.0 && discount <= 1.0))
    throw std::invalid_argument("env.discount must be in [0, 1]");
  if (init_pos_range < 0.0) throw std::invalid_argument("env.init_pos_range must be >= 0");
  if (init_att_range < 0.0) throw std::invalid_argument("env.init_att_range must be >= 0");
  if (init_vel_range < 0.0) throw std::invalid_argument("env.init_vel_range must be >= 0");
  if (!(max_rate_cmd > 0.0)) throw std::invalid_argument("env.max_rate_cmd must be > 0");
  inertial.validate();
  rotor.validate();
  rate_ctrl.validate();
  disturbance.validate();
}

double compute_reward(const Eigen::Vector3d& position_error,
                      const Eigen::Vector3d& action, const EnvConfig& config) {
  if (!position_error.allFinite() || !action.allFinite()) {
    throw std::invalid_argument("invalid state");
  }
  if (position_error.norm() >= config.max_position_error) {
    return -config.crash_penalty;
  }
  double axis_product = 1.0;
  for (int i = 0; i < 3; ++i) {
    axis_product *= std::max(0.0, 1.0 - config.reward_slope * std::abs(position_error[i]));
  }
  return axis_product * axis_product - config.effort_weight * action.squaredNorm();
}

Env::Env(const EnvConfig& config, std::uint64_t seed)
    : config_(config),
      mixer_(config.rotor),
      rng_(derive_seed(seed, 0)),
      noise_rng_(derive_seed(seed, 1)) {
  config_.validate();
  frames_.assign(config_.history + 1, Eigen::VectorXd::Zero(EnvConfig::kFrameWidth));
}

Eigen::VectorXd Env::frame(int trigger) const {
  Eigen::VectorXd f(EnvConfig::kFrameWidth);
  f.segment<3>(0) = state_.position - config_.reference_position;
  f.segment<3>(3) = state_.velocity;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) f[6 + 3 * r + c] = state_.rotation(r, c);
  f.segment<3>(15) = state_.angular_velocity;
  f[18] = static_cast<double>(trigger);
  return f;
}

Eigen::VectorXd Env::assemble_observation() const {
  const int n = static_cast<int>(frames_.size());
  Eigen::VectorXd obs(EnvConfig::kFrameWidth * n);
  // oldest first, newest last
  for (int i = 0; i < n; ++i) {
    const int idx = (frame_head_ + 1 + i) % n;
    obs.segment(EnvConfig::kFrameWidth * i, EnvConfig::kFrameWidth) = frames_[idx];
  }
  return obs;
}

Eigen::VectorXd Env::reset() {
  state_ = RigidBodyState{};
  for (int i = 0; i < 3; ++i) {
    state_.position[i] = config_.reference_position[i] +
                         rng_.uniform(-config_.init_pos_range, config_.init_pos_range);
  }
  Eigen::Vector3d angles;
  for (int i = 0; i < 3; ++i)
    angles[i] = rng_.uniform(-config_.init_att_range, config_.init_att_range);
  state_.rotation = (Eigen::AngleAxisd(angles.z(), Eigen::Vector3d::UnitZ()) *
                     Eigen::AngleAxisd(angles.y(), Eigen::Vector3d::UnitY()) *
                     Eigen::AngleAxisd(angles.x(), Eigen::Vector3d::UnitX()))
                        .toRotationMatrix();
  for (int i = 0; i < 3; ++i)
    state_.velocity[i] = rng_.uniform(-config_.init_vel_range, config_.init_vel_range);
  state_.angular_velocity.setZero();

  event_.reset();
  if (config_.enable_disturbance) {
    event_ = sample_event(config_.disturbance, config_.episode_steps * config_.dt, rng_);
  }

  step_count_ = 0;
  finished_ = false;

  const int o_t = (config_.enable_trigger_obs && event_) ? trigger_value(*event_, 0.0) : 0;
  const Eigen::VectorXd initial = frame(o_t);
  for (auto& f : frames_) f = initial;
  frame_head_ = static_cast<int>(frames_.size()) - 1;
  return assemble_observation();
}

StepResult Env::step(const Eigen::Vector3d& action) {
  if (finished_) throw std::logic_error("episode finished");

  const Eigen::Vector3d u = action.cwiseMax(-1.0).cwiseMin(1.0);
  RateCommand cmd;
  cmd.thrust_delta = u[0] * config_.inertial.mass * config_.inertial.gravity;
  cmd.rate_x = u[1] * config_.max_rate_cmd;
  cmd.rate_y = u[2] * config_.max_rate_cmd;

  const double t = time();
  Eigen::Vector3d f_d = Eigen::Vector3d::Zero();
  if (event_) f_d = disturbance_force(*event_, t, noise_rng_);

  const RotorMixer::Command rotor_cmd =
      compute_rotor_commands(cmd, 0.0, state_, config_.inertial, mixer_, config_.rate_ctrl);
  const Wrench applied = mixer_.rotor_speeds_to_wrench(rotor_cmd.omegas);

  state_ = integrate_step(state_, applied.thrust, applied.torque, f_d, config_.inertial,
                          config_.dt);
  ++step_count_;

  const Eigen::Vector3d e_p = state_.position - config_.reference_position;
  const double reward = compute_reward(e_p, u, config_);
  const bool crashed = e_p.norm() >= config_.max_position_error;
  finished_ = crashed || step_count_ >= config_.episode_steps;

  const int o_t =
      (config_.enable_trigger_obs && event_) ? trigger_value(*event_, time()) : 0;
  frame_head_ = (frame_head_ + 1) % static_cast<int>(frames_.size());
  frames_[frame_head_] = frame(o_t);

  StepResult result;
  result.observation = assemble_observation();
  result.reward = reward;
  result.terminated = finished_;
  result.info.position_error = e_p;
  result.info.applied_force = f_d;
  result.info.trigger = o_t;
  result.info.saturated = rotor_cmd.saturated;

  if (record_hook_) {
    StepRecord rec;
    rec.step = step_count_;
    rec.t = time();
    rec.position = state_.position;
    rec.position_error = e_p;
    rec.velocity = state_.velocity;
    rec.angular_velocity = state_.angular_velocity;
    rec.action = u;
    rec.cmd_thrust = cmd.thrust_delta;
    rec.cmd_rate_x = cmd.rate_x;
    rec.cmd_rate_y = cmd.rate_y;
    rec.trigger = o_t;
    rec.force_x = f_d.x();
    rec.reward = reward;
    record_hook_(rec);
  }
  return result;
}

VecEnv::VecEnv(const EnvConfig& config, int num_envs, std::uint64_t base_seed,
               int threads)
    : threads_(std::max(1, threads)) {
  if (num_envs < 1) throw std::invalid_argument("num_envs must be >= 1");
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) {
    envs_.push_back(std::make_unique<Env>(config, derive_seed(base_seed, i)));
  }
  observations_.resize(num_envs, config.observation_dim());
  rewards_.setZero(num_envs);
  terminations_.assign(num_envs, 0);
  episode_returns_.assign(num_envs, 0.0);
  episode_lengths_.assign(num_envs, 0);
}

void VecEnv::for_each_env(const std::function<void(int)>& body) {
  const int n = size();
  if (threads_ <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = std::min(threads_, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

void VecEnv::reset_all() {
  for_each_env([&](int i) { observations_.row(i) = envs_[i]->reset().transpose(); });
  std::fill(terminations_.begin(), terminations_.end(), 0);
  rewards_.setZero();
  std::fill(episode_returns_.begin(), episode_returns_.end(), 0.0);
  std::fill(episode_lengths_.begin(), episode_lengths_.end(), 0);
  finished_episodes_.clear();
}

void VecEnv::step(const Eigen::MatrixXd& actions) {
  if (actions.rows() != size() || actions.cols() != 3) {
    throw std::invalid_argument("actions must be num_envs x 3");
  }
  std::vector<std::pair<double, int>> done(size(), {0.0, -1});
  for_each_env([&](int i) {
    StepResult r = envs_[i]->step(actions.row(i).transpose());
    rewards_[i] = r.reward;
    terminations_[i] = r.terminated ? 1 : 0;
    episode_returns_[i] += r.reward;
    episode_lengths_[i] += 1;
    if (r.terminated) {
      done[i] = {episode_returns_[i], episode_lengths_[i]};
      episode_returns_[i] = 0.0;
      episode_lengths_[i] = 0;
      observations_.row(i) = envs_[i]->reset().transpose();
    } else {
      observations_.row(i) = r.observation.transpose();
    }
  });
  // fixed env order, independent of threading
  finished_episodes_.clear();
  for (int i = 0; i < size(); ++i) {
    if (done[i].second >= 0) finished_episodes_.push_back(done[i]);
  }
}

}  // namespace recoil
