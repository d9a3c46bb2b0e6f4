#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlreach/agents.hpp"
#include "rlreach/errors.hpp"

namespace rlreach::agents {

using nn::RowMatrix;

ActorCritic make_actor_critic(std::size_t obs_dim, std::size_t action_dim, const PpoConfig& cfg,
                              std::mt19937_64& rng) {
  const auto h = static_cast<std::size_t>(cfg.hidden);
  ActorCritic model;
  model.policy.mean_net = nn::Mlp::glorot(nn::chain_shapes(obs_dim, {h, h}, action_dim), rng);
  model.policy.log_std.assign(action_dim, cfg.log_std_init);
  model.policy.clamp_log_std();
  model.value = nn::Mlp::glorot(nn::chain_shapes(obs_dim, {h, h}, 1), rng);
  return model;
}

PpoOptimizer::PpoOptimizer(const ActorCritic& model, double lr)
    : policy(model.policy.mean_net.n_params(), lr),
      log_std(model.policy.log_std.size(), lr),
      value(model.value.n_params(), lr) {}

PpoMinibatchResult ppo_minibatch_loss(const ActorCritic& model, const RolloutBatch& batch,
                                      std::span<const std::size_t> indices, const PpoConfig& cfg) {
  const std::size_t m = indices.size();
  if (m == 0) throw ContractViolation("ppo_minibatch_loss: empty minibatch");
  const auto& policy = model.policy;
  const std::size_t act_dim = policy.action_dim();
  if (static_cast<std::size_t>(batch.actions.cols()) != act_dim ||
      static_cast<std::size_t>(batch.obs.cols()) != policy.obs_dim()) {
    throw ContractViolation("ppo_minibatch_loss: batch does not match the policy dimensions");
  }

  RowMatrix obs(static_cast<Eigen::Index>(m), batch.obs.cols());
  RowMatrix act(static_cast<Eigen::Index>(m), batch.actions.cols());
  std::vector<double> adv(m), ret(m), old_lp(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(indices[i]);
    obs.row(static_cast<Eigen::Index>(i)) = batch.obs.row(r);
    act.row(static_cast<Eigen::Index>(i)) = batch.actions.row(r);
    adv[i] = batch.advantages[indices[i]];
    ret[i] = batch.returns[indices[i]];
    old_lp[i] = batch.old_log_probs[indices[i]];
  }

  // Advantage normalisation over the minibatch.
  const double adv_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(m);
  double adv_var = 0.0;
  for (double a : adv) adv_var += (a - adv_mean) * (a - adv_mean);
  const double adv_std = m > 1 ? std::sqrt(adv_var / static_cast<double>(m - 1)) : 0.0;
  for (double& a : adv) a = (a - adv_mean) / (adv_std + 1e-8);

  nn::Mlp::Tape pi_tape;
  nn::Mlp::Tape v_tape;
  const RowMatrix mean = policy.mean_net.forward_batch(obs, &pi_tape);
  const RowMatrix values = model.value.forward_batch(obs, &v_tape);

  std::vector<double> inv_var(act_dim);
  for (std::size_t j = 0; j < act_dim; ++j) inv_var[j] = std::exp(-2.0 * policy.log_std[j]);

  PpoMinibatchResult out;
  out.ratios.resize(m);
  out.log_std_grad.assign(act_dim, 0.0);
  RowMatrix mean_grad(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(act_dim));
  RowMatrix value_grad_out(static_cast<Eigen::Index>(m), 1);

  const double eps = cfg.clip_range;
  const double inv_m = 1.0 / static_cast<double>(m);
  double policy_loss = 0.0;
  double value_loss = 0.0;
  std::size_t n_clipped = 0;

  for (std::size_t i = 0; i < m; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double new_lp = nn::gaussian_log_prob(
        std::span<const double>(mean.row(row).data(), act_dim), policy.log_std,
        std::span<const double>(act.row(row).data(), act_dim));
    const double ratio = std::exp(new_lp - old_lp[i]);
    out.ratios[i] = ratio;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double surr1 = ratio * adv[i];
    const double surr2 = clipped * adv[i];
    policy_loss -= std::min(surr1, surr2) * inv_m;
    if (std::abs(ratio - 1.0) > eps) ++n_clipped;

    // Gradient flows only through the unclipped branch.
    const bool unclipped_active = surr1 <= surr2 || (ratio >= 1.0 - eps && ratio <= 1.0 + eps);
    const double dlp = unclipped_active ? -ratio * adv[i] * inv_m : 0.0;
    for (std::size_t j = 0; j < act_dim; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const double diff = act(row, col) - mean(row, col);
      mean_grad(row, col) = dlp * diff * inv_var[j];
      out.log_std_grad[j] += dlp * (diff * diff * inv_var[j] - 1.0);
    }

    const double err = values(row, 0) - ret[i];
    value_loss += err * err * inv_m;
    value_grad_out(row, 0) = cfg.vf_coef * 2.0 * err * inv_m;
  }

  const double entropy = nn::gaussian_entropy(policy.log_std);
  for (double& g : out.log_std_grad) g -= cfg.ent_coef;

  out.policy_grad.assign(policy.mean_net.n_params(), 0.0);
  policy.mean_net.backward_batch(pi_tape, mean_grad, out.policy_grad);
  out.value_grad.assign(model.value.n_params(), 0.0);
  model.value.backward_batch(v_tape, value_grad_out, out.value_grad);

  out.loss.policy_loss = policy_loss;
  out.loss.value_loss = value_loss;
  out.loss.entropy = entropy;
  out.loss.total_loss = policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy;
  out.loss.clip_fraction = static_cast<double>(n_clipped) * inv_m;
  if (!std::isfinite(out.loss.total_loss)) {
    throw NumericError("ppo: non-finite loss");
  }
  return out;
}

PpoLossReport ppo_update(ActorCritic& model, PpoOptimizer& opt, const RolloutBatch& batch,
                         const PpoConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = batch.size();
  if (n == 0) throw ContractViolation("ppo_update: empty rollout");
  if (batch.advantages.size() != n || batch.returns.size() != n ||
      static_cast<std::size_t>(batch.obs.rows()) != n ||
      static_cast<std::size_t>(batch.actions.rows()) != n) {
    throw ContractViolation("ppo_update: rollout columns have different lengths");
  }
  const auto mb = static_cast<std::size_t>(cfg.minibatch_size);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoLossReport sum;
  std::size_t n_minibatches = 0;
  std::vector<double> grads;
  for (std::int64_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t len = std::min(mb, n - start);
      auto result = ppo_minibatch_loss(model, batch, std::span(order).subspan(start, len), cfg);

      // Global-norm clipping over all parameters of both networks.
      grads.clear();
      grads.insert(grads.end(), result.policy_grad.begin(), result.policy_grad.end());
      grads.insert(grads.end(), result.log_std_grad.begin(), result.log_std_grad.end());
      grads.insert(grads.end(), result.value_grad.begin(), result.value_grad.end());
      nn::clip_grad_norm(grads, cfg.max_grad_norm);

      std::span<const double> all(grads);
      const std::size_t np = result.policy_grad.size();
      const std::size_t nl = result.log_std_grad.size();
      nn::adam_step(model.policy.mean_net.params(), all.subspan(0, np), opt.policy);
      nn::adam_step(model.policy.log_std, all.subspan(np, nl), opt.log_std);
      nn::adam_step(model.value.params(), all.subspan(np + nl), opt.value);
      model.policy.clamp_log_std();

      sum.policy_loss += result.loss.policy_loss;
      sum.value_loss += result.loss.value_loss;
      sum.entropy += result.loss.entropy;
      sum.total_loss += result.loss.total_loss;
      sum.clip_fraction += result.loss.clip_fraction;
      ++n_minibatches;
    }
  }
  const double k = static_cast<double>(n_minibatches);
  sum.policy_loss /= k;
  sum.value_loss /= k;
  sum.entropy /= k;
  sum.total_loss /= k;
  sum.clip_fraction /= k;
  return sum;
}

}  // namespace rlreach::agents
