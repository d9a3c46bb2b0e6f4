#include "rlreach/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rlreach/errors.hpp"

namespace rlreach::nn {

std::vector<double> GaussianPolicy::mean_action(std::span<const double> obs) const {
  return mean_net.forward(obs);
}

std::vector<double> GaussianPolicy::act(std::span<const double> obs, bool deterministic,
                                        std::mt19937_64& rng) const {
  auto mean = mean_action(obs);
  if (deterministic || !stochastic()) return mean;
  return gaussian_sample(mean, log_std, rng).action;
}

void GaussianPolicy::clamp_log_std() {
  for (double& v : log_std) v = std::clamp(v, kLogStdMin, kLogStdMax);
}

nlohmann::json GaussianPolicy::to_json() const {
  nlohmann::json shapes = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t k = 0; k < mean_net.n_layers(); ++k) {
    const auto& s = mean_net.shapes()[k];
    shapes.push_back({s.in, s.out});
    auto w = mean_net.weight(k);
    auto b = mean_net.bias(k);
    weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  return {{"layer_shapes", shapes},
          {"weights", weights},
          {"biases", biases},
          {"log_std", log_std},
          {"output_activation", to_string(mean_net.output_activation())}};
}

GaussianPolicy GaussianPolicy::from_json(const nlohmann::json& doc) {
  try {
    std::vector<LayerShape> shapes;
    for (const auto& s : doc.at("layer_shapes")) {
      if (s.size() != 2) throw ValidationError("policy JSON: layer shape must be [in, out]");
      shapes.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
    }
    if (shapes.empty()) throw ValidationError("policy JSON: no layers");
    Activation out = Activation::Identity;
    if (doc.contains("output_activation")) {
      out = activation_from_string(doc["output_activation"].get<std::string>());
    }
    GaussianPolicy policy{Mlp(shapes, out), doc.at("log_std").get<std::vector<double>>()};
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (weights.size() != shapes.size() || biases.size() != shapes.size()) {
      throw ValidationError("policy JSON: weights/biases do not match layer_shapes");
    }
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      auto w = weights[k].get<std::vector<double>>();
      auto b = biases[k].get<std::vector<double>>();
      auto wm = policy.mean_net.weight(k);
      auto bm = policy.mean_net.bias(k);
      if (w.size() != static_cast<std::size_t>(wm.size()) ||
          b.size() != static_cast<std::size_t>(bm.size())) {
        throw ValidationError("policy JSON: layer " + std::to_string(k) + " has wrong size");
      }
      std::copy(w.begin(), w.end(), wm.data());
      std::copy(b.begin(), b.end(), bm.data());
    }
    if (policy.stochastic() && policy.log_std.size() != policy.action_dim()) {
      throw ValidationError("policy JSON: log_std length does not match action dimension");
    }
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy JSON: ") + e.what());
  } catch (const ContractViolation& e) {
    throw ValidationError(std::string("policy JSON: ") + e.what());
  }
}

GaussianPolicy zero_policy(std::size_t obs_dim, std::size_t action_dim) {
  return {Mlp({{obs_dim, action_dim}}), std::vector<double>(action_dim, 0.0)};
}

}  // namespace rlreach::nn
