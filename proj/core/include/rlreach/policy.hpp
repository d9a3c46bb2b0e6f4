#pragma once

#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlreach/neural.hpp"

namespace rlreach::nn {

// Observation -> action distribution. A mean network plus a state-independent
// log standard deviation; an empty log_std means the policy is deterministic.
struct GaussianPolicy {
  Mlp mean_net;
  std::vector<double> log_std;

  std::size_t obs_dim() const { return mean_net.in_dim(); }
  std::size_t action_dim() const { return mean_net.out_dim(); }
  bool stochastic() const { return !log_std.empty(); }

  std::vector<double> mean_action(std::span<const double> obs) const;
  // Mean action when deterministic (or when the policy has no log_std).
  std::vector<double> act(std::span<const double> obs, bool deterministic,
                          std::mt19937_64& rng) const;

  void clamp_log_std();

  // {"layer_shapes", "weights", "biases", "log_std", "output_activation"}
  nlohmann::json to_json() const;
  static GaussianPolicy from_json(const nlohmann::json& doc);
};

// Stay-still style policy: zero mean network, log_std 0.
GaussianPolicy zero_policy(std::size_t obs_dim, std::size_t action_dim);

}  // namespace rlreach::nn
