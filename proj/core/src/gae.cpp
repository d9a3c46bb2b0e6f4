#include <string>

#include "rlreach/agents.hpp"
#include "rlreach/errors.hpp"

namespace rlreach::agents {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double next_value, std::span<const std::uint8_t> dones, double gamma,
                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ContractViolation("compute_gae: rewards/values/dones lengths differ (" +
                            std::to_string(n) + ", " + std::to_string(values.size()) + ", " +
                            std::to_string(dones.size()) + ")");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_v = next_value;
  for (std::size_t t = n; t-- > 0;) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_v * not_done - values[t];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
    next_v = values[t];
  }
  return out;
}

}  // namespace rlreach::agents
