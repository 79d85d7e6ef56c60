#include "recoil/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace recoil {

namespace {

using nlohmann::json;

json layers_to_json(const Mlp<float>& net) {
  json layers = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(static_cast<double>(w(r, c)));
      rows.push_back(std::move(row));
    }
    const auto b = net.bias(l);
    json bias = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) bias.push_back(static_cast<double>(b[i]));
    layers.push_back(json{{"weight", std::move(rows)}, {"bias", std::move(bias)}});
  }
  return layers;
}

void layers_from_json(const json& layers, Mlp<float>& net) {
  if (static_cast<int>(layers.size()) != net.num_layers())
    throw std::runtime_error("checkpoint: layer count mismatch");
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    const json& rows = layers[l].at("weight");
    if (static_cast<Eigen::Index>(rows.size()) != w.rows())
      throw std::runtime_error("checkpoint: weight rows mismatch");
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const json& row = rows[r];
      if (static_cast<Eigen::Index>(row.size()) != w.cols())
        throw std::runtime_error("checkpoint: weight cols mismatch");
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<float>(row[c].get<double>());
    }
    auto b = net.bias(l);
    const json& bias = layers[l].at("bias");
    if (static_cast<Eigen::Index>(bias.size()) != b.size())
      throw std::runtime_error("checkpoint: bias size mismatch");
    for (Eigen::Index i = 0; i < b.size(); ++i)
      b[i] = static_cast<float>(bias[i].get<double>());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ActorCritic<float>& policy,
                     const PolicyMeta& meta,
                     const std::map<std::string, std::string>& config_echo) {
  json doc;
  doc["format_version"] = 1;
  doc["architecture"] = {
      {"input", policy.input_dim()},
      {"hidden", policy.actor.shape().hidden},
      {"actor_output", policy.action_dim()},
      {"critic_output", 1},
      {"activation", "elu"},
      {"mean_squash", "tanh"},
  };
  doc["io"] = {
      {"frame_width", meta.frame_width},
      {"history", meta.history},
      {"trigger_obs", meta.trigger_obs},
      {"max_rate_cmd", meta.max_rate_cmd},
      {"thrust_delta_scale", meta.thrust_delta_scale},
  };
  json log_std = json::array();
  for (Eigen::Index i = 0; i < policy.log_std.size(); ++i)
    log_std.push_back(static_cast<double>(policy.log_std[i]));
  doc["actor"] = {{"layers", layers_to_json(policy.actor)}, {"log_std", std::move(log_std)}};
  doc["critic"] = {{"layers", layers_to_json(policy.critic)}};
  doc["config"] = config_echo;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << doc.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " + err.what());
  }

  if (doc.at("format_version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported format version");

  const json& arch = doc.at("architecture");
  const int input = arch.at("input").get<int>();
  const std::vector<int> hidden = arch.at("hidden").get<std::vector<int>>();
  const int action_dim = arch.at("actor_output").get<int>();

  Checkpoint ckpt{ActorCritic<float>(input, hidden, action_dim), {}, {}};
  layers_from_json(doc.at("actor").at("layers"), ckpt.policy.actor);
  layers_from_json(doc.at("critic").at("layers"), ckpt.policy.critic);
  const json& log_std = doc.at("actor").at("log_std");
  if (static_cast<Eigen::Index>(log_std.size()) != ckpt.policy.log_std.size())
    throw std::runtime_error("checkpoint: log_std size mismatch");
  for (Eigen::Index i = 0; i < ckpt.policy.log_std.size(); ++i)
    ckpt.policy.log_std[i] = static_cast<float>(log_std[i].get<double>());

  const json& io = doc.at("io");
  ckpt.meta.frame_width = io.at("frame_width").get<int>();
  ckpt.meta.history = io.at("history").get<int>();
  ckpt.meta.trigger_obs = io.at("trigger_obs").get<bool>();
  ckpt.meta.max_rate_cmd = io.at("max_rate_cmd").get<double>();
  ckpt.meta.thrust_delta_scale = io.at("thrust_delta_scale").get<double>();

  if (doc.contains("config")) {
    ckpt.config_echo = doc.at("config").get<std::map<std::string, std::string>>();
  }
  return ckpt;
}

}  // namespace recoil
