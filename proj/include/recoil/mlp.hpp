#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "recoil/rng.hpp"

namespace recoil {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowMajorMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MlpShape {
  int input{0};
  std::vector<int> hidden;
  int output{0};

  std::vector<int> layer_sizes() const {
    std::vector<int> sizes{input};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output);
    return sizes;
  }

  Eigen::Index param_count() const {
    Eigen::Index count = 0;
    const auto sizes = layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      count += static_cast<Eigen::Index>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    }
    return count;
  }

  bool operator==(const MlpShape&) const = default;
};

// Feed-forward network with ELU hidden activations and a linear output
// layer. Parameters live in one flat vector (per layer: row-major weight
// matrix, then bias), which keeps the optimizer, gradient clipping, and
// finite-difference checks simple.
template <typename T>
class Mlp {
 public:
  explicit Mlp(MlpShape shape) : shape_(std::move(shape)) {
    if (shape_.input <= 0 || shape_.output <= 0)
      throw std::invalid_argument("mlp shape must have positive input/output");
    for (int h : shape_.hidden)
      if (h <= 0) throw std::invalid_argument("mlp hidden sizes must be positive");
    const auto sizes = shape_.layer_sizes();
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      LayerLayout layout;
      layout.in = sizes[l];
      layout.out = sizes[l + 1];
      layout.weight_offset = offset;
      offset += static_cast<Eigen::Index>(layout.out) * layout.in;
      layout.bias_offset = offset;
      offset += layout.out;
      layers_.push_back(layout);
    }
    params_ = VecX<T>::Zero(offset);
  }

  const MlpShape& shape() const { return shape_; }
  Eigen::Index param_count() const { return params_.size(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  VecX<T>& params() { return params_; }
  const VecX<T>& params() const { return params_; }

  Eigen::Map<RowMajorMat<T>> weight(int layer) {
    const auto& l = layers_[layer];
    return {params_.data() + l.weight_offset, l.out, l.in};
  }
  Eigen::Map<const RowMajorMat<T>> weight(int layer) const {
    const auto& l = layers_[layer];
    return {params_.data() + l.weight_offset, l.out, l.in};
  }
  Eigen::Map<VecX<T>> bias(int layer) {
    const auto& l = layers_[layer];
    return {params_.data() + l.bias_offset, l.out};
  }
  Eigen::Map<const VecX<T>> bias(int layer) const {
    const auto& l = layers_[layer];
    return {params_.data() + l.bias_offset, l.out};
  }

  // Fan-in scaled uniform init, biases zero; the output layer is shrunk by
  // output_scale so the initial policy stays near zero action.
  void init_uniform(RandomStream& rng, T output_scale = T(1)) {
    for (int l = 0; l < num_layers(); ++l) {
      auto w = weight(l);
      const T scale = std::sqrt(T(1) / static_cast<T>(w.cols())) *
                      (l + 1 == num_layers() ? output_scale : T(1));
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          w(r, c) = static_cast<T>(rng.uniform(-1.0, 1.0)) * scale;
      bias(l).setZero();
    }
  }

  struct Cache {
    std::vector<MatX<T>> inputs;    // input fed to each layer
    std::vector<MatX<T>> preacts;   // pre-activation of each layer
  };

  // x: batch x input. Returns batch x output.
  MatX<T> forward(const MatX<T>& x, Cache* cache = nullptr) const {
    if (x.cols() != shape_.input) throw std::invalid_argument("mlp input width mismatch");
    if (cache) {
      cache->inputs.assign(num_layers(), {});
      cache->preacts.assign(num_layers(), {});
    }
    MatX<T> a = x;
    for (int l = 0; l < num_layers(); ++l) {
      if (cache) cache->inputs[l] = a;
      MatX<T> z = a * weight(l).transpose();
      z.rowwise() += bias(l).transpose();
      if (cache) cache->preacts[l] = z;
      if (l + 1 < num_layers()) {
        a = z.unaryExpr([](T v) { return v > T(0) ? v : std::expm1(v); });
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  // dy: gradient w.r.t. the network output. Accumulates parameter gradients
  // into grad (same layout as params). Returns the gradient w.r.t. the input
  // when requested, otherwise an empty matrix.
  MatX<T> backward(const Cache& cache, const MatX<T>& dy, VecX<T>& grad,
                   bool need_input_grad = false) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("grad size mismatch");
    MatX<T> dz = dy;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const auto& layout = layers_[l];
      Eigen::Map<RowMajorMat<T>> dw(grad.data() + layout.weight_offset, layout.out, layout.in);
      Eigen::Map<VecX<T>> db(grad.data() + layout.bias_offset, layout.out);
      dw.noalias() += dz.transpose() * cache.inputs[l];
      db.noalias() += dz.colwise().sum().transpose();
      if (l > 0) {
        MatX<T> da = dz * weight(l);
        // ELU derivative from the cached pre-activation
        dz = da.cwiseProduct(cache.preacts[l - 1].unaryExpr(
            [](T v) { return v > T(0) ? T(1) : std::exp(v); }));
      } else if (need_input_grad) {
        return dz * weight(0);
      }
    }
    return {};
  }

 private:
  struct LayerLayout {
    int in{0};
    int out{0};
    Eigen::Index weight_offset{0};
    Eigen::Index bias_offset{0};
  };

  MlpShape shape_;
  std::vector<LayerLayout> layers_;
  VecX<T> params_;
};

// Diagonal-Gaussian log density, one row per sample. Shared by rollout
// collection and the update path so recomputed values match bitwise.
template <typename T>
VecX<T> gaussian_log_prob(const MatX<T>& actions, const MatX<T>& means,
                          const VecX<T>& log_std) {
  constexpr T kHalfLog2Pi = T(0.9189385332046727);
  VecX<T> out(actions.rows());
  for (Eigen::Index i = 0; i < actions.rows(); ++i) {
    T acc = T(0);
    for (Eigen::Index j = 0; j < actions.cols(); ++j) {
      const T z = (actions(i, j) - means(i, j)) * std::exp(-log_std[j]);
      acc += T(-0.5) * z * z - log_std[j] - kHalfLog2Pi;
    }
    out[i] = acc;
  }
  return out;
}

// Entropy of a diagonal Gaussian (state independent for a fixed log-std).
template <typename T>
T gaussian_entropy(const VecX<T>& log_std) {
  constexpr T kHalfLog2PiE = T(1.4189385332046727);
  return log_std.sum() + static_cast<T>(log_std.size()) * kHalfLog2PiE;
}

// Mean KL(old || new) between diagonal Gaussians, one row per sample.
template <typename T>
T gaussian_kl(const MatX<T>& mean_old, const VecX<T>& log_std_old,
              const MatX<T>& mean_new, const VecX<T>& log_std_new) {
  T acc = T(0);
  for (Eigen::Index i = 0; i < mean_old.rows(); ++i) {
    for (Eigen::Index j = 0; j < mean_old.cols(); ++j) {
      const T var_old = std::exp(T(2) * log_std_old[j]);
      const T var_new = std::exp(T(2) * log_std_new[j]);
      const T dmean = mean_old(i, j) - mean_new(i, j);
      acc += log_std_new[j] - log_std_old[j] +
             (var_old + dmean * dmean) / (T(2) * var_new) - T(0.5);
    }
  }
  return acc / static_cast<T>(mean_old.rows());
}

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Actor and critic networks over the same observation input, plus the
// actor's state-independent log standard deviations.
template <typename T>
struct ActorCritic {
  Mlp<T> actor;
  Mlp<T> critic;
  VecX<T> log_std;

  ActorCritic(int input_dim, std::vector<int> hidden, int action_dim)
      : actor(MlpShape{input_dim, hidden, action_dim}),
        critic(MlpShape{input_dim, hidden, 1}),
        log_std(VecX<T>::Zero(action_dim)) {}

  int input_dim() const { return actor.shape().input; }
  int action_dim() const { return actor.shape().output; }

  void init(RandomStream& rng, T log_std_init) {
    actor.init_uniform(rng, T(0.01));
    critic.init_uniform(rng, T(0.01));
    log_std.setConstant(log_std_init);
    clamp_log_std();
  }

  void clamp_log_std() {
    log_std = log_std.cwiseMax(T(kLogStdMin)).cwiseMin(T(kLogStdMax));
  }

  struct ActorCache {
    typename Mlp<T>::Cache net;
    MatX<T> mean;  // tanh-squashed
  };

  // Squashed action means in [-1, 1]; cache enables actor_backward.
  MatX<T> actor_mean(const MatX<T>& obs, ActorCache* cache = nullptr) const {
    MatX<T> raw = actor.forward(obs, cache ? &cache->net : nullptr);
    MatX<T> mean = raw.unaryExpr([](T v) { return std::tanh(v); });
    if (cache) cache->mean = mean;
    return mean;
  }

  // dmean: gradient w.r.t. the squashed mean.
  void actor_backward(const ActorCache& cache, const MatX<T>& dmean,
                      VecX<T>& actor_grad) const {
    const MatX<T> draw =
        dmean.cwiseProduct(cache.mean.unaryExpr([](T v) { return T(1) - v * v; }));
    actor.backward(cache.net, draw, actor_grad);
  }

  VecX<T> critic_value(const MatX<T>& obs, typename Mlp<T>::Cache* cache = nullptr) const {
    return critic.forward(obs, cache);
  }

  void critic_backward(const typename Mlp<T>::Cache& cache, const VecX<T>& dvalue,
                       VecX<T>& critic_grad) const {
    critic.backward(cache, MatX<T>(dvalue), critic_grad);
  }
};

// Gaussian policy draw. The environment consumes the clipped action; the
// raw sample and its log density are kept for the surrogate objective.
template <typename T>
struct ActionSample {
  Eigen::Matrix<T, Eigen::Dynamic, 1> raw;
  Eigen::Matrix<T, Eigen::Dynamic, 1> clipped;
  T log_prob;
};

template <typename T>
ActionSample<T> sample_action(const VecX<T>& mean, const VecX<T>& log_std,
                              RandomStream& rng) {
  ActionSample<T> s;
  s.raw.resize(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    s.raw[j] = mean[j] + std::exp(log_std[j]) * static_cast<T>(rng.normal());
  }
  s.clipped = s.raw.cwiseMax(T(-1)).cwiseMin(T(1));
  MatX<T> a(1, mean.size()), m(1, mean.size());
  a.row(0) = s.raw.transpose();
  m.row(0) = mean.transpose();
  s.log_prob = gaussian_log_prob<T>(a, m, log_std)[0];
  return s;
}

template <typename T>
struct ActorCriticGrads {
  VecX<T> actor;
  VecX<T> critic;
  VecX<T> log_std;

  explicit ActorCriticGrads(const ActorCritic<T>& net)
      : actor(VecX<T>::Zero(net.actor.param_count())),
        critic(VecX<T>::Zero(net.critic.param_count())),
        log_std(VecX<T>::Zero(net.log_std.size())) {}

  void setZero() {
    actor.setZero();
    critic.setZero();
    log_std.setZero();
  }

  T squared_norm() const {
    return actor.squaredNorm() + critic.squaredNorm() + log_std.squaredNorm();
  }

  void scale(T s) {
    actor *= s;
    critic *= s;
    log_std *= s;
  }
};

// Adaptive first-order optimizer with bias-corrected first/second moment
// estimates (Adam), over the parameter blocks of an actor-critic pair.
template <typename T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const ActorCritic<T>& net, T beta1 = T(0.9),
                         T beta2 = T(0.999), T epsilon = T(1e-8))
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    for (Eigen::Index n : {net.actor.param_count(), net.critic.param_count(),
                           net.log_std.size()}) {
      m_.push_back(VecX<T>::Zero(n));
      v_.push_back(VecX<T>::Zero(n));
    }
  }

  void step(ActorCritic<T>& net, const ActorCriticGrads<T>& grads, T learning_rate) {
    ++t_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
    VecX<T>* params[3] = {&net.actor.params(), &net.critic.params(), &net.log_std};
    const VecX<T>* g[3] = {&grads.actor, &grads.critic, &grads.log_std};
    for (int b = 0; b < 3; ++b) {
      m_[b] = beta1_ * m_[b] + (T(1) - beta1_) * (*g[b]);
      v_[b] = beta2_ * v_[b] + (T(1) - beta2_) * g[b]->cwiseProduct(*g[b]);
      const VecX<T> m_hat = m_[b] / bc1;
      const VecX<T> v_hat = v_[b] / bc2;
      params[b]->array() -=
          learning_rate * m_hat.array() / (v_hat.array().sqrt() + epsilon_);
    }
    net.clamp_log_std();
  }

 private:
  T beta1_, beta2_, epsilon_;
  long t_{0};
  std::vector<VecX<T>> m_;
  std::vector<VecX<T>> v_;
};

}  // namespace recoil
