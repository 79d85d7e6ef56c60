#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "recoil/environment.hpp"
#include "recoil/mlp.hpp"

namespace recoil {

struct PpoConfig {
  double learning_rate{1e-4};  // initial; adapted on KL after every mini-epoch
  double kl_target{0.008};
  double clip_epsilon{0.2};
  double discount{0.99};
  double gae_lambda{0.95};
  int horizon{32};       // steps per env per update
  int minibatches{4};
  int mini_epochs{4};
  int num_envs{1024};
  int max_epochs{1000};
  double entropy_coef{0.0};
  double max_grad_norm{1.0};
  double log_std_init{0.0};
  std::vector<int> hidden{256, 256, 256};

  void validate() const;
};

// On-policy storage for one update: horizon x num_envs samples, indexed
// t * num_envs + env. Observations, actions, and log-probs are float like
// the network; rewards, values, and advantages stay in double for the
// estimator math.
struct RolloutBuffer {
  int horizon{0};
  int num_envs{0};

  MatX<float> observations;  // (horizon*num_envs) x obs_dim
  MatX<float> actions;       // raw (unclipped) Gaussian samples
  MatX<float> means;         // behavior-policy means
  VecX<float> log_probs;     // behavior-policy log densities
  VecX<float> log_std_old;   // behavior-policy log-stds (snapshot)
  VecX<double> rewards;
  VecX<double> values;
  std::vector<std::uint8_t> dones;
  VecX<double> advantages;
  VecX<double> returns;

  RolloutBuffer(int horizon_steps, int envs, int obs_dim, int act_dim);
  int size() const { return horizon * num_envs; }
  Eigen::Index index(int t, int env) const {
    return static_cast<Eigen::Index>(t) * num_envs + env;
  }
};

// Generalized advantage estimation over one trajectory slice; the recursion
// resets at termination flags and bootstraps the value after the last step.
void gae_sequence(const double* rewards, const double* values,
                  const std::uint8_t* dones, int n, double bootstrap_value,
                  double discount, double lambda, double* advantages,
                  double* returns);

// Runs GAE per environment using the buffer layout, then leaves advantages
// un-normalized (callers normalize once per update).
void gae_advantages(RolloutBuffer& buffer, double discount, double lambda,
                    const VecX<double>& bootstrap_values);

// Shift to zero mean, scale to unit standard deviation.
void normalize_advantages(VecX<double>& advantages);

// KL-adaptive learning-rate rule: shrink by 1.5x above twice the target,
// grow by 1.5x below half of it, clamped to [1e-6, 1e-2].
double adapt_lr(double lr, double kl, double kl_target);

struct UpdateStats {
  double policy_loss{0.0};
  double value_loss{0.0};
  double approx_kl{0.0};
  double lr{0.0};
  int mini_epochs_run{0};
};

// One PPO update over a filled buffer (advantages computed): clipped
// surrogate + 0.5 * value MSE - entropy bonus, manual backprop, global
// gradient-norm clipping, Adam steps per minibatch. The learning rate is
// adapted after every mini-epoch; mini-epochs stop early once the KL
// divergence exceeds 1.5x the target. Throws std::runtime_error on a
// non-finite loss.
UpdateStats ppo_update(ActorCritic<float>& net, AdamOptimizer<float>& optimizer,
                       RolloutBuffer& buffer, const PpoConfig& config,
                       double& learning_rate, RandomStream& shuffle_rng);

enum class PolicyVariant { kNominal, kIPolicy, kItPolicy };

std::string variant_name(PolicyVariant variant);
PolicyVariant variant_from_name(const std::string& name);

// Disturbance / trigger-observation toggles of the variant applied to a
// base environment config.
EnvConfig apply_variant(EnvConfig config, PolicyVariant variant);

struct EpochLog {
  int epoch{0};
  double mean_return{0.0};
  double mean_episode_len{0.0};
  double policy_loss{0.0};
  double value_loss{0.0};
  double approx_kl{0.0};
  double lr{0.0};
};

struct TrainResult {
  ActorCritic<float> policy;
  std::vector<EpochLog> curve;
  EnvConfig env_config;   // after variant toggles
  PpoConfig ppo_config;
  double final_mean_episode_len{0.0};
};

// Full collect/update loop for one policy variant. Deterministic for a
// given seed when run single-threaded.
TrainResult train(const EnvConfig& base_env, const PpoConfig& config,
                  PolicyVariant variant, std::uint64_t seed,
                  std::ostream* log = nullptr);

}  // namespace recoil
