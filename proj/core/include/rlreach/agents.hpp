#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlreach/neural.hpp"
#include "rlreach/policy.hpp"

namespace rlreach::agents {

enum class Algo { PPO, TD3, Random };

std::string to_string(Algo algo);          // "ppo", "td3", "random"
Algo algo_from_string(std::string name);   // case-insensitive; throws ValidationError

// Offsets from the run seed; one integer fully determines a run.
inline constexpr std::uint64_t kNetSeedOffset = 1000;
inline constexpr std::uint64_t kNoiseSeedOffset = 2000;

struct PpoConfig {
  std::int64_t n_timesteps = 1;
  std::int64_t rollout_len = 2048;
  std::int64_t minibatch_size = 64;
  std::int64_t n_epochs = 10;
  double lr = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  std::int64_t hidden = 64;     // width of each of the two hidden layers
  double log_std_init = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  // Defaults overridden by `overrides`; unknown keys are rejected.
  static PpoConfig from_json(const nlohmann::json& overrides);
};

struct Td3Config {
  std::int64_t n_timesteps = 1;
  std::int64_t buffer_size = 100000;
  std::int64_t batch_size = 256;
  std::int64_t learning_starts = 1000;
  std::int64_t policy_delay = 2;
  double lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  double explore_noise = 0.1;
  std::int64_t hidden = 64;

  void validate() const;
  nlohmann::json to_json() const;
  static Td3Config from_json(const nlohmann::json& overrides);
};

// Full resolved hyperparameter set for `algo` (defaults merged with overrides).
nlohmann::json resolve_hyperparams(Algo algo, const nlohmann::json& overrides);

// ---------------------------------------------------------------- training log

struct TrainingLogRow {
  std::int64_t timestep = 0;
  std::int64_t episode = 0;
  double episode_return = 0.0;
  double episode_final_distance_m = 0.0;
  bool operator==(const TrainingLogRow&) const = default;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;

  std::string to_csv() const;
  static TrainingLog from_csv(std::string_view text);
};

// ---------------------------------------------------------------- GAE

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t;  A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double next_value, std::span<const std::uint8_t> dones, double gamma,
                      double lambda);

// ---------------------------------------------------------------- PPO

struct ActorCritic {
  nn::GaussianPolicy policy;
  nn::Mlp value;
};

ActorCritic make_actor_critic(std::size_t obs_dim, std::size_t action_dim, const PpoConfig& cfg,
                              std::mt19937_64& rng);

struct RolloutBatch {
  nn::RowMatrix obs;
  nn::RowMatrix actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return old_log_probs.size(); }
};

struct PpoLossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
  double clip_fraction = 0.0;
};

struct PpoMinibatchResult {
  PpoLossReport loss;
  std::vector<double> ratios;
  std::vector<double> policy_grad;   // mean network parameters
  std::vector<double> log_std_grad;
  std::vector<double> value_grad;
};

// Clipped-surrogate loss and exact gradients on one minibatch. Advantages are
// normalised over the minibatch (mean 0, std 1, eps 1e-8).
PpoMinibatchResult ppo_minibatch_loss(const ActorCritic& model, const RolloutBatch& batch,
                                      std::span<const std::size_t> indices, const PpoConfig& cfg);

struct PpoOptimizer {
  nn::AdamState policy;
  nn::AdamState log_std;
  nn::AdamState value;

  PpoOptimizer() = default;
  PpoOptimizer(const ActorCritic& model, double lr);
};

// n_epochs passes of shuffled minibatches; returns losses averaged over all minibatches.
PpoLossReport ppo_update(ActorCritic& model, PpoOptimizer& opt, const RolloutBatch& batch,
                         const PpoConfig& cfg, std::mt19937_64& rng);

// ---------------------------------------------------------------- TD3

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

// Fixed-capacity ring of transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim);

  void push(std::span<const double> obs, std::span<const double> action, double reward,
            std::span<const double> next_obs, bool done);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t cursor() const { return cursor_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  // Uniform indices over filled slots.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  Transition at(std::size_t slot) const;

  const nn::RowMatrix& obs() const { return obs_; }
  const nn::RowMatrix& actions() const { return actions_; }
  const nn::RowMatrix& next_obs() const { return next_obs_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<std::uint8_t>& dones() const { return dones_; }

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  nn::RowMatrix obs_;
  nn::RowMatrix actions_;
  nn::RowMatrix next_obs_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> dones_;
};

struct Td3Nets {
  nn::Mlp actor;
  nn::Mlp critic1;
  nn::Mlp critic2;
  nn::Mlp actor_target;
  nn::Mlp critic1_target;
  nn::Mlp critic2_target;
};

Td3Nets make_td3_nets(std::size_t obs_dim, std::size_t action_dim, const Td3Config& cfg,
                      std::mt19937_64& rng);

struct Td3Optimizers {
  nn::AdamState actor;
  nn::AdamState critic1;
  nn::AdamState critic2;
  std::int64_t critic_updates = 0;

  Td3Optimizers() = default;
  Td3Optimizers(const Td3Nets& nets, double lr);
};

struct Td3LossReport {
  double critic_loss = 0.0;
  std::optional<double> actor_loss;  // set on delayed policy updates
  std::vector<double> targets;       // y for the sampled batch
};

// One critic update (and, every policy_delay calls, an actor update plus
// Polyak averaging of all targets).
Td3LossReport td3_update(Td3Nets& nets, Td3Optimizers& opt, const ReplayBuffer& buffer,
                         const Td3Config& cfg, std::mt19937_64& rng, std::int64_t step);

// target <- tau * online + (1 - tau) * target
void polyak_update(const nn::Mlp& online, nn::Mlp& target, double tau);

// ---------------------------------------------------------------- training loop

struct CheckpointHook {
  std::vector<std::int64_t> steps;  // timesteps at which `on_checkpoint` fires
  // Return false to stop training early.
  std::function<bool(std::int64_t timestep, const nn::GaussianPolicy& policy)> on_checkpoint;
};

struct TrainResult {
  nn::GaussianPolicy policy;
  TrainingLog log;
  bool failed = false;
  std::string failure_message;
  bool stopped_early = false;
  std::int64_t timesteps_done = 0;
};

// Env seed = seed, net init seed = seed + 1000, sampler/noise seed = seed + 2000.
// Numeric failures are caught and reported through TrainResult::failed with the
// partial log retained.
TrainResult train(Algo algo, const std::string& env_id, std::uint64_t seed,
                  const nlohmann::json& hyperparams, std::int64_t n_timesteps,
                  const CheckpointHook* hook = nullptr);

}  // namespace rlreach::agents
