#include "recoil/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace recoil {

void PpoConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo.learning_rate must be > 0");
  if (!(kl_target > 0.0)) throw std::invalid_argument("ppo.kl_target must be > 0");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::invalid_argument("ppo.clip_epsilon must be in (0, 1)");
  if (!(discount >= 0.0 && discount <= 1.0))
    throw std::invalid_argument("ppo.discount must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("ppo.gae_lambda must be in [0, 1]");
  if (horizon < 1) throw std::invalid_argument("ppo.horizon must be >= 1");
  if (minibatches < 1) throw std::invalid_argument("ppo.minibatches must be >= 1");
  if (mini_epochs < 1) throw std::invalid_argument("ppo.mini_epochs must be >= 1");
  if (num_envs < 1) throw std::invalid_argument("ppo.num_envs must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("ppo.max_epochs must be >= 1");
  if (entropy_coef < 0.0) throw std::invalid_argument("ppo.entropy_coef must be >= 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("ppo.max_grad_norm must be > 0");
  if (hidden.empty()) throw std::invalid_argument("ppo.hidden must be non-empty");
  if ((static_cast<long>(horizon) * num_envs) % minibatches != 0)
    throw std::invalid_argument("ppo.minibatches must divide horizon * num_envs");
}

RolloutBuffer::RolloutBuffer(int horizon_steps, int envs, int obs_dim, int act_dim)
    : horizon(horizon_steps), num_envs(envs) {
  const int n = horizon * num_envs;
  observations.setZero(n, obs_dim);
  actions.setZero(n, act_dim);
  means.setZero(n, act_dim);
  log_probs.setZero(n);
  log_std_old.setZero(act_dim);
  rewards.setZero(n);
  values.setZero(n);
  dones.assign(n, 0);
  advantages.setZero(n);
  returns.setZero(n);
}

void gae_sequence(const double* rewards, const double* values,
                  const std::uint8_t* dones, int n, double bootstrap_value,
                  double discount, double lambda, double* advantages,
                  double* returns) {
  double carry = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double next_value = (t + 1 < n) ? values[t + 1] : bootstrap_value;
    const double delta = rewards[t] + discount * next_value * nonterminal - values[t];
    carry = delta + discount * lambda * nonterminal * carry;
    advantages[t] = carry;
    returns[t] = carry + values[t];
  }
}

void gae_advantages(RolloutBuffer& buffer, double discount, double lambda,
                    const VecX<double>& bootstrap_values) {
  if (bootstrap_values.size() != buffer.num_envs)
    throw std::invalid_argument("bootstrap values must match num_envs");
  std::vector<double> r(buffer.horizon), v(buffer.horizon), adv(buffer.horizon),
      ret(buffer.horizon);
  std::vector<std::uint8_t> d(buffer.horizon);
  for (int e = 0; e < buffer.num_envs; ++e) {
    for (int t = 0; t < buffer.horizon; ++t) {
      const Eigen::Index i = buffer.index(t, e);
      r[t] = buffer.rewards[i];
      v[t] = buffer.values[i];
      d[t] = buffer.dones[i];
    }
    gae_sequence(r.data(), v.data(), d.data(), buffer.horizon, bootstrap_values[e],
                 discount, lambda, adv.data(), ret.data());
    for (int t = 0; t < buffer.horizon; ++t) {
      const Eigen::Index i = buffer.index(t, e);
      buffer.advantages[i] = adv[t];
      buffer.returns[i] = ret[t];
    }
  }
}

void normalize_advantages(VecX<double>& advantages) {
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double std =
      std::sqrt(advantages.squaredNorm() / static_cast<double>(advantages.size()));
  advantages /= (std + 1e-8);
}

double adapt_lr(double lr, double kl, double kl_target) {
  if (kl > 2.0 * kl_target) {
    lr /= 1.5;
  } else if (kl < 0.5 * kl_target) {
    lr *= 1.5;
  }
  return std::clamp(lr, 1e-6, 1e-2);
}

namespace {

struct Minibatch {
  MatX<float> obs;
  MatX<float> actions;
  MatX<float> means_old;
  VecX<float> log_probs_old;
  VecX<double> advantages;
  VecX<double> returns;
};

Minibatch gather(const RolloutBuffer& buffer, const std::vector<int>& perm,
                 int begin, int count) {
  Minibatch mb;
  mb.obs.resize(count, buffer.observations.cols());
  mb.actions.resize(count, buffer.actions.cols());
  mb.means_old.resize(count, buffer.means.cols());
  mb.log_probs_old.resize(count);
  mb.advantages.resize(count);
  mb.returns.resize(count);
  for (int i = 0; i < count; ++i) {
    const int src = perm[begin + i];
    mb.obs.row(i) = buffer.observations.row(src);
    mb.actions.row(i) = buffer.actions.row(src);
    mb.means_old.row(i) = buffer.means.row(src);
    mb.log_probs_old[i] = buffer.log_probs[src];
    mb.advantages[i] = buffer.advantages[src];
    mb.returns[i] = buffer.returns[src];
  }
  return mb;
}

}  // namespace

UpdateStats ppo_update(ActorCritic<float>& net, AdamOptimizer<float>& optimizer,
                       RolloutBuffer& buffer, const PpoConfig& config,
                       double& learning_rate, RandomStream& shuffle_rng) {
  const int total = buffer.size();
  if (total % config.minibatches != 0)
    throw std::invalid_argument("minibatches must divide the buffer size");
  const int mb_size = total / config.minibatches;

  // Behavior-policy log-probs and means, computed through the same
  // minibatch-shaped forward path the first mini-epoch uses so the
  // probability ratio starts at exactly 1.
  for (int mb = 0; mb < config.minibatches; ++mb) {
    const int begin = mb * mb_size;
    const MatX<float> obs = buffer.observations.middleRows(begin, mb_size);
    const MatX<float> mean = net.actor_mean(obs);
    buffer.means.middleRows(begin, mb_size) = mean;
    buffer.log_probs.segment(begin, mb_size) = gaussian_log_prob<float>(
        buffer.actions.middleRows(begin, mb_size), mean, net.log_std);
  }
  buffer.log_std_old = net.log_std;

  std::vector<int> perm(total);
  std::iota(perm.begin(), perm.end(), 0);

  ActorCriticGrads<float> grads(net);
  UpdateStats stats;
  stats.lr = learning_rate;
  double policy_loss_sum = 0.0;
  double value_loss_sum = 0.0;
  int loss_count = 0;

  const double clip_lo = 1.0 - config.clip_epsilon;
  const double clip_hi = 1.0 + config.clip_epsilon;

  for (int mini_epoch = 0; mini_epoch < config.mini_epochs; ++mini_epoch) {
    if (mini_epoch > 0) {
      // Fisher-Yates with the trainer's stream
      for (int i = total - 1; i > 0; --i) {
        const int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
        std::swap(perm[i], perm[j]);
      }
    }

    double kl_sum = 0.0;
    for (int mb = 0; mb < config.minibatches; ++mb) {
      const Minibatch batch = gather(buffer, perm, mb * mb_size, mb_size);

      typename ActorCritic<float>::ActorCache actor_cache;
      const MatX<float> mean = net.actor_mean(batch.obs, &actor_cache);
      typename Mlp<float>::Cache critic_cache;
      const VecX<float> values = net.critic_value(batch.obs, &critic_cache);
      const VecX<float> log_probs =
          gaussian_log_prob<float>(batch.actions, mean, net.log_std);

      kl_sum += static_cast<double>(gaussian_kl<float>(
          batch.means_old, buffer.log_std_old, mean, net.log_std));

      const double inv_count = 1.0 / mb_size;
      VecX<double> dlogp(mb_size);
      double policy_loss = 0.0;
      for (int i = 0; i < mb_size; ++i) {
        const double ratio = std::exp(static_cast<double>(log_probs[i]) -
                                      static_cast<double>(batch.log_probs_old[i]));
        const double adv = batch.advantages[i];
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, clip_lo, clip_hi) * adv;
        policy_loss -= std::min(unclipped, clipped);
        // the clip branch is only selected with the ratio outside the
        // band, where its gradient vanishes
        dlogp[i] = (unclipped <= clipped) ? -ratio * adv * inv_count : 0.0;
      }
      policy_loss *= inv_count;

      double value_loss = 0.0;
      VecX<float> dvalue(mb_size);
      for (int i = 0; i < mb_size; ++i) {
        const double err = static_cast<double>(values[i]) - batch.returns[i];
        value_loss += err * err;
        dvalue[i] = static_cast<float>(err * inv_count);
      }
      value_loss *= 0.5 * inv_count;

      if (!std::isfinite(policy_loss) || !std::isfinite(value_loss)) {
        throw std::runtime_error("training diverged: non-finite loss in minibatch " +
                                 std::to_string(mb));
      }
      policy_loss_sum += policy_loss;
      value_loss_sum += value_loss;
      ++loss_count;

      // d(loss)/d(mean) and d(loss)/d(log_std) through the Gaussian density
      MatX<float> dmean(mb_size, net.action_dim());
      VecX<double> dlog_std = VecX<double>::Zero(net.action_dim());
      for (int j = 0; j < net.action_dim(); ++j) {
        const double inv_var = std::exp(-2.0 * static_cast<double>(net.log_std[j]));
        for (int i = 0; i < mb_size; ++i) {
          const double diff =
              static_cast<double>(batch.actions(i, j)) - static_cast<double>(mean(i, j));
          dmean(i, j) = static_cast<float>(dlogp[i] * diff * inv_var);
          dlog_std[j] += dlogp[i] * (diff * diff * inv_var - 1.0);
        }
        dlog_std[j] -= config.entropy_coef;  // d(-coef * entropy)/d(log_std) = -coef
      }

      grads.setZero();
      net.actor_backward(actor_cache, dmean, grads.actor);
      net.critic_backward(critic_cache, dvalue, grads.critic);
      grads.log_std = dlog_std.cast<float>();

      const float norm = std::sqrt(grads.squared_norm());
      if (norm > static_cast<float>(config.max_grad_norm)) {
        grads.scale(static_cast<float>(config.max_grad_norm) / norm);
      }
      optimizer.step(net, grads, static_cast<float>(learning_rate));
    }

    const double kl = kl_sum / config.minibatches;
    learning_rate = adapt_lr(learning_rate, kl, config.kl_target);
    stats.approx_kl = kl;
    stats.mini_epochs_run = mini_epoch + 1;
    if (kl > 1.5 * config.kl_target) break;
  }

  stats.policy_loss = policy_loss_sum / loss_count;
  stats.value_loss = value_loss_sum / loss_count;
  stats.lr = learning_rate;
  return stats;
}

std::string variant_name(PolicyVariant variant) {
  switch (variant) {
    case PolicyVariant::kNominal: return "nominal";
    case PolicyVariant::kIPolicy: return "i";
    case PolicyVariant::kItPolicy: return "it";
  }
  return "unknown";
}

PolicyVariant variant_from_name(const std::string& name) {
  if (name == "nominal") return PolicyVariant::kNominal;
  if (name == "i") return PolicyVariant::kIPolicy;
  if (name == "it") return PolicyVariant::kItPolicy;
  throw std::invalid_argument("unknown policy variant: " + name);
}

EnvConfig apply_variant(EnvConfig config, PolicyVariant variant) {
  switch (variant) {
    case PolicyVariant::kNominal:
      config.enable_disturbance = false;
      config.enable_trigger_obs = false;
      break;
    case PolicyVariant::kIPolicy:
      config.enable_disturbance = true;
      config.enable_trigger_obs = false;
      break;
    case PolicyVariant::kItPolicy:
      config.enable_disturbance = true;
      config.enable_trigger_obs = true;
      break;
  }
  return config;
}

TrainResult train(const EnvConfig& base_env, const PpoConfig& config,
                  PolicyVariant variant, std::uint64_t seed, std::ostream* log) {
  config.validate();
  const EnvConfig env_config = apply_variant(base_env, variant);
  env_config.validate();

  VecEnv envs(env_config, config.num_envs, derive_seed(seed, 101));
  const int obs_dim = env_config.observation_dim();

  ActorCritic<float> net(obs_dim, config.hidden, 3);
  RandomStream init_rng(derive_seed(seed, 202));
  net.init(init_rng, static_cast<float>(config.log_std_init));
  AdamOptimizer<float> optimizer(net);
  RolloutBuffer buffer(config.horizon, config.num_envs, obs_dim, 3);

  const std::uint64_t action_base = derive_seed(seed, 303);
  std::vector<RandomStream> action_rngs;
  action_rngs.reserve(config.num_envs);
  for (int e = 0; e < config.num_envs; ++e) {
    action_rngs.emplace_back(derive_seed(action_base, e));
  }
  RandomStream shuffle_rng(derive_seed(seed, 404));

  envs.reset_all();

  std::deque<double> recent_returns;
  std::deque<int> recent_lengths;
  constexpr std::size_t kRecentWindow = 100;
  const auto mean_of = [](const auto& window) {
    if (window.empty()) return 0.0;
    double sum = 0.0;
    for (double v : window) sum += v;
    return sum / static_cast<double>(window.size());
  };

  TrainResult result{std::move(net), {}, env_config, config, 0.0};
  double lr = config.learning_rate;
  Eigen::MatrixXd clipped_actions(config.num_envs, 3);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (int t = 0; t < config.horizon; ++t) {
      const MatX<float> obs = envs.observations().cast<float>();
      const MatX<float> means = result.policy.actor_mean(obs);
      const VecX<float> values = result.policy.critic_value(obs);

      for (int e = 0; e < config.num_envs; ++e) {
        const Eigen::Index i = buffer.index(t, e);
        buffer.observations.row(i) = obs.row(e);
        const VecX<float> mean_e = means.row(e).transpose();
        const ActionSample<float> sample =
            sample_action<float>(mean_e, result.policy.log_std, action_rngs[e]);
        buffer.actions.row(i) = sample.raw.transpose();
        buffer.values[i] = static_cast<double>(values[e]);
        clipped_actions.row(e) = sample.clipped.cast<double>().transpose();
      }

      envs.step(clipped_actions);
      for (int e = 0; e < config.num_envs; ++e) {
        const Eigen::Index i = buffer.index(t, e);
        buffer.rewards[i] = envs.rewards()[e];
        buffer.dones[i] = envs.terminations()[e];
      }
      for (const auto& [episode_return, episode_len] : envs.finished_episodes()) {
        recent_returns.push_back(episode_return);
        recent_lengths.push_back(episode_len);
        if (recent_returns.size() > kRecentWindow) recent_returns.pop_front();
        if (recent_lengths.size() > kRecentWindow) recent_lengths.pop_front();
      }
    }

    const VecX<double> bootstrap =
        result.policy.critic_value(envs.observations().cast<float>()).cast<double>();
    gae_advantages(buffer, config.discount, config.gae_lambda, bootstrap);
    normalize_advantages(buffer.advantages);

    UpdateStats stats;
    try {
      stats = ppo_update(result.policy, optimizer, buffer, config, lr, shuffle_rng);
    } catch (const std::runtime_error& err) {
      throw std::runtime_error(std::string(err.what()) + " (epoch " +
                               std::to_string(epoch) + ")");
    }

    EpochLog row;
    row.epoch = epoch;
    row.mean_return = mean_of(recent_returns);
    row.mean_episode_len = mean_of(recent_lengths);
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.approx_kl = stats.approx_kl;
    row.lr = lr;
    result.curve.push_back(row);

    if (log && (epoch % 25 == 0 || epoch == config.max_epochs)) {
      (*log) << "epoch " << epoch << " return " << row.mean_return << " len "
             << row.mean_episode_len << " kl " << row.approx_kl << " lr " << lr
             << '\n';
    }
  }

  result.final_mean_episode_len = mean_of(recent_lengths);
  return result;
}

}  // namespace recoil
