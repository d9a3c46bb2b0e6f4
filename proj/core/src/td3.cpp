#include <algorithm>
#include <cmath>

#include "rlreach/agents.hpp"
#include "rlreach/errors.hpp"

namespace rlreach::agents {

using nn::RowMatrix;

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ContractViolation("ReplayBuffer: capacity must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  obs_.resize(cap, static_cast<Eigen::Index>(obs_dim));
  next_obs_.resize(cap, static_cast<Eigen::Index>(obs_dim));
  actions_.resize(cap, static_cast<Eigen::Index>(action_dim));
  rewards_.assign(capacity, 0.0);
  dones_.assign(capacity, 0);
}

void ReplayBuffer::push(std::span<const double> obs, std::span<const double> action, double reward,
                        std::span<const double> next_obs, bool done) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != action_dim_) {
    throw ContractViolation("ReplayBuffer::push: transition dimensions do not match buffer");
  }
  const auto row = static_cast<Eigen::Index>(cursor_);
  for (std::size_t j = 0; j < obs_dim_; ++j) {
    obs_(row, static_cast<Eigen::Index>(j)) = obs[j];
    next_obs_(row, static_cast<Eigen::Index>(j)) = next_obs[j];
  }
  for (std::size_t j = 0; j < action_dim_; ++j) actions_(row, static_cast<Eigen::Index>(j)) = action[j];
  rewards_[cursor_] = reward;
  dones_[cursor_] = done ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw ContractViolation("ReplayBuffer::sample: buffer is empty");
  std::uniform_int_distribution<std::size_t> dist(0, size_ - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = dist(rng);
  return idx;
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw ContractViolation("ReplayBuffer::at: slot not filled");
  const auto r = static_cast<Eigen::Index>(slot);
  Transition t;
  t.obs.assign(obs_.row(r).data(), obs_.row(r).data() + obs_dim_);
  t.action.assign(actions_.row(r).data(), actions_.row(r).data() + action_dim_);
  t.next_obs.assign(next_obs_.row(r).data(), next_obs_.row(r).data() + obs_dim_);
  t.reward = rewards_[slot];
  t.done = dones_[slot] != 0;
  return t;
}

Td3Nets make_td3_nets(std::size_t obs_dim, std::size_t action_dim, const Td3Config& cfg,
                      std::mt19937_64& rng) {
  const auto h = static_cast<std::size_t>(cfg.hidden);
  Td3Nets nets;
  nets.actor = nn::Mlp::glorot(nn::chain_shapes(obs_dim, {h, h}, action_dim), rng,
                               nn::Activation::Tanh);
  nets.critic1 = nn::Mlp::glorot(nn::chain_shapes(obs_dim + action_dim, {h, h}, 1), rng);
  nets.critic2 = nn::Mlp::glorot(nn::chain_shapes(obs_dim + action_dim, {h, h}, 1), rng);
  nets.actor_target = nets.actor;
  nets.critic1_target = nets.critic1;
  nets.critic2_target = nets.critic2;
  return nets;
}

Td3Optimizers::Td3Optimizers(const Td3Nets& nets, double lr)
    : actor(nets.actor.n_params(), lr),
      critic1(nets.critic1.n_params(), lr),
      critic2(nets.critic2.n_params(), lr) {}

void polyak_update(const nn::Mlp& online, nn::Mlp& target, double tau) {
  auto src = online.params();
  auto dst = target.params();
  if (src.size() != dst.size()) throw ContractViolation("polyak_update: shape mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
}

namespace {

RowMatrix concat_cols(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

double critic_step(nn::Mlp& critic, nn::AdamState& opt, const RowMatrix& input,
                   const std::vector<double>& y) {
  nn::Mlp::Tape tape;
  const RowMatrix q = critic.forward_batch(input, &tape);
  const auto b = static_cast<double>(y.size());
  RowMatrix dq(q.rows(), 1);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double err = q(i, 0) - y[static_cast<std::size_t>(i)];
    loss += err * err / b;
    dq(i, 0) = 2.0 * err / b;
  }
  if (!std::isfinite(loss)) throw NumericError("td3: non-finite critic loss");
  std::vector<double> grad(critic.n_params(), 0.0);
  critic.backward_batch(tape, dq, grad);
  nn::adam_step(critic.params(), grad, opt);
  return loss;
}

}  // namespace

Td3LossReport td3_update(Td3Nets& nets, Td3Optimizers& opt, const ReplayBuffer& buffer,
                         const Td3Config& cfg, std::mt19937_64& rng, std::int64_t step) {
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (buffer.size() < batch) {
    throw ContractViolation("td3_update: buffer holds " + std::to_string(buffer.size()) +
                            " transitions, batch needs " + std::to_string(batch));
  }
  if (step < cfg.learning_starts) {
    throw ContractViolation("td3_update: called before learning_starts");
  }

  const auto idx = buffer.sample_indices(batch, rng);
  const auto b = static_cast<Eigen::Index>(batch);
  const auto od = static_cast<Eigen::Index>(buffer.obs_dim());
  const auto ad = static_cast<Eigen::Index>(buffer.action_dim());
  RowMatrix obs(b, od), next_obs(b, od), act(b, ad);
  std::vector<double> rew(batch), not_done(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto s = static_cast<Eigen::Index>(idx[i]);
    obs.row(r) = buffer.obs().row(s);
    next_obs.row(r) = buffer.next_obs().row(s);
    act.row(r) = buffer.actions().row(s);
    rew[i] = buffer.rewards()[idx[i]];
    not_done[i] = buffer.dones()[idx[i]] ? 0.0 : 1.0;
  }

  // Target policy smoothing.
  RowMatrix next_act = nets.actor_target.forward_batch(next_obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < next_act.size(); ++i) {
    const double noise =
        std::clamp(cfg.policy_noise * normal(rng), -cfg.noise_clip, cfg.noise_clip);
    next_act.data()[i] = std::clamp(next_act.data()[i] + noise, -1.0, 1.0);
  }
  const RowMatrix next_in = concat_cols(next_obs, next_act);
  const RowMatrix q1_t = nets.critic1_target.forward_batch(next_in);
  const RowMatrix q2_t = nets.critic2_target.forward_batch(next_in);

  Td3LossReport report;
  report.targets.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    report.targets[i] = rew[i] + cfg.gamma * not_done[i] * std::min(q1_t(r, 0), q2_t(r, 0));
  }

  const RowMatrix critic_in = concat_cols(obs, act);
  report.critic_loss = critic_step(nets.critic1, opt.critic1, critic_in, report.targets) +
                       critic_step(nets.critic2, opt.critic2, critic_in, report.targets);

  const bool policy_turn = opt.critic_updates % cfg.policy_delay == 0;
  ++opt.critic_updates;
  if (!policy_turn) return report;

  // Actor: minimise -mean Q1(s, pi(s)).
  nn::Mlp::Tape actor_tape;
  nn::Mlp::Tape critic_tape;
  const RowMatrix pi = nets.actor.forward_batch(obs, &actor_tape);
  const RowMatrix q = nets.critic1.forward_batch(concat_cols(obs, pi), &critic_tape);
  const double inv_b = 1.0 / static_cast<double>(batch);
  report.actor_loss = -q.sum() * inv_b;
  if (!std::isfinite(*report.actor_loss)) throw NumericError("td3: non-finite actor loss");

  RowMatrix dq = RowMatrix::Constant(b, 1, -inv_b);
  std::vector<double> scratch(nets.critic1.n_params(), 0.0);
  const RowMatrix d_in = nets.critic1.backward_batch(critic_tape, dq, scratch);
  const RowMatrix d_pi = d_in.rightCols(ad);
  std::vector<double> actor_grad(nets.actor.n_params(), 0.0);
  nets.actor.backward_batch(actor_tape, d_pi, actor_grad);
  nn::adam_step(nets.actor.params(), actor_grad, opt.actor);

  polyak_update(nets.actor, nets.actor_target, cfg.tau);
  polyak_update(nets.critic1, nets.critic1_target, cfg.tau);
  polyak_update(nets.critic2, nets.critic2_target, cfg.tau);
  return report;
}

}  // namespace rlreach::agents
