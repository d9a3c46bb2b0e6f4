#include <algorithm>
#include <cctype>
#include <cmath>

#include "rlreach/agents.hpp"
#include "rlreach/csv.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/io.hpp"
#include "rlreach/reach_env.hpp"

namespace rlreach::agents {

using nlohmann::json;

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::PPO:
      return "ppo";
    case Algo::TD3:
      return "td3";
    case Algo::Random:
      return "random";
  }
  return "?";
}

Algo algo_from_string(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name == "ppo") return Algo::PPO;
  if (name == "td3") return Algo::TD3;
  if (name == "random") return Algo::Random;
  throw ValidationError("unknown algo '" + name + "'; supported: ppo, td3, random");
}

namespace {

// Defaults overlaid with overrides. Keys must already exist in `defaults`;
// integer fields only accept integral numbers.
json merge_overrides(const json& defaults, const json& overrides, const std::string& algo) {
  if (overrides.is_null()) return defaults;
  if (!overrides.is_object()) throw ValidationError("hyperparameters must be a JSON object");
  json merged = defaults;
  for (const auto& [key, value] : overrides.items()) {
    if (!merged.contains(key)) {
      std::string valid;
      for (const auto& [k, _] : defaults.items()) valid += (valid.empty() ? "" : ", ") + k;
      throw ValidationError("unknown hyperparameter '" + key + "' for " + algo + "; valid: " + valid);
    }
    if (!value.is_number()) {
      throw ValidationError("hyperparameter '" + key + "' must be numeric");
    }
    if (merged[key].is_number_integer()) {
      const double v = value.get<double>();
      if (v != std::floor(v)) throw ValidationError("hyperparameter '" + key + "' must be an integer");
      merged[key] = static_cast<std::int64_t>(v);
    } else {
      merged[key] = value.get<double>();
    }
  }
  return merged;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

// n_timesteps is carried by the experiment record, not the hyperparameter map.
json PpoConfig::to_json() const {
  return {{"rollout_len", rollout_len},   {"minibatch_size", minibatch_size},
          {"n_epochs", n_epochs},         {"lr", lr},
          {"gamma", gamma},               {"gae_lambda", gae_lambda},
          {"clip_range", clip_range},     {"ent_coef", ent_coef},
          {"vf_coef", vf_coef},           {"max_grad_norm", max_grad_norm},
          {"hidden", hidden},             {"log_std_init", log_std_init}};
}

PpoConfig PpoConfig::from_json(const json& overrides) {
  const json m = merge_overrides(PpoConfig{}.to_json(), overrides, "ppo");
  PpoConfig c;
  c.rollout_len = m["rollout_len"].get<std::int64_t>();
  c.minibatch_size = m["minibatch_size"].get<std::int64_t>();
  c.n_epochs = m["n_epochs"].get<std::int64_t>();
  c.lr = m["lr"].get<double>();
  c.gamma = m["gamma"].get<double>();
  c.gae_lambda = m["gae_lambda"].get<double>();
  c.clip_range = m["clip_range"].get<double>();
  c.ent_coef = m["ent_coef"].get<double>();
  c.vf_coef = m["vf_coef"].get<double>();
  c.max_grad_norm = m["max_grad_norm"].get<double>();
  c.hidden = m["hidden"].get<std::int64_t>();
  c.log_std_init = m["log_std_init"].get<double>();
  c.validate();
  return c;
}

void PpoConfig::validate() const {
  require(n_timesteps >= 1, "ppo: n_timesteps must be >= 1");
  require(rollout_len >= 1 && minibatch_size >= 1 && n_epochs >= 1,
          "ppo: rollout_len, minibatch_size and n_epochs must be >= 1");
  require(rollout_len % minibatch_size == 0, "ppo: rollout_len must be divisible by minibatch_size");
  require(lr > 0.0, "ppo: lr must be > 0");
  require(gamma > 0.0 && gamma <= 1.0, "ppo: gamma must be in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "ppo: gae_lambda must be in [0, 1]");
  require(clip_range > 0.0, "ppo: clip_range must be > 0");
  require(ent_coef >= 0.0 && vf_coef >= 0.0, "ppo: ent_coef and vf_coef must be >= 0");
  require(max_grad_norm > 0.0, "ppo: max_grad_norm must be > 0");
  require(hidden >= 1, "ppo: hidden must be >= 1");
  require(log_std_init >= nn::kLogStdMin && log_std_init <= nn::kLogStdMax,
          "ppo: log_std_init must lie in [-20, 2]");
}

json Td3Config::to_json() const {
  return {{"buffer_size", buffer_size},   {"batch_size", batch_size},
          {"learning_starts", learning_starts}, {"policy_delay", policy_delay},
          {"lr", lr},                     {"gamma", gamma},
          {"tau", tau},                   {"policy_noise", policy_noise},
          {"noise_clip", noise_clip},     {"explore_noise", explore_noise},
          {"hidden", hidden}};
}

Td3Config Td3Config::from_json(const json& overrides) {
  const json m = merge_overrides(Td3Config{}.to_json(), overrides, "td3");
  Td3Config c;
  c.buffer_size = m["buffer_size"].get<std::int64_t>();
  c.batch_size = m["batch_size"].get<std::int64_t>();
  c.learning_starts = m["learning_starts"].get<std::int64_t>();
  c.policy_delay = m["policy_delay"].get<std::int64_t>();
  c.lr = m["lr"].get<double>();
  c.gamma = m["gamma"].get<double>();
  c.tau = m["tau"].get<double>();
  c.policy_noise = m["policy_noise"].get<double>();
  c.noise_clip = m["noise_clip"].get<double>();
  c.explore_noise = m["explore_noise"].get<double>();
  c.hidden = m["hidden"].get<std::int64_t>();
  c.validate();
  return c;
}

void Td3Config::validate() const {
  require(n_timesteps >= 1, "td3: n_timesteps must be >= 1");
  require(batch_size >= 1 && buffer_size >= batch_size, "td3: need buffer_size >= batch_size >= 1");
  require(learning_starts >= 0, "td3: learning_starts must be >= 0");
  require(policy_delay >= 1, "td3: policy_delay must be >= 1");
  require(lr > 0.0, "td3: lr must be > 0");
  require(gamma >= 0.0 && gamma <= 1.0, "td3: gamma must be in [0, 1]");
  require(tau > 0.0 && tau <= 1.0, "td3: tau must be in (0, 1]");
  require(policy_noise >= 0.0 && noise_clip >= 0.0 && explore_noise >= 0.0,
          "td3: noise scales must be >= 0");
  require(hidden >= 1, "td3: hidden must be >= 1");
}

json resolve_hyperparams(Algo algo, const json& overrides) {
  switch (algo) {
    case Algo::PPO:
      return PpoConfig::from_json(overrides).to_json();
    case Algo::TD3:
      return Td3Config::from_json(overrides).to_json();
    case Algo::Random:
      if (!overrides.is_null() && !overrides.empty()) {
        throw ValidationError("random agent takes no hyperparameters");
      }
      return json::object();
  }
  return json::object();
}

// ---------------------------------------------------------------- training log

namespace {
const std::vector<std::string> kLogHeader = {"timestep", "episode", "episode_return",
                                             "episode_final_distance_m"};
}

std::string TrainingLog::to_csv() const {
  csv::Table table;
  table.header = kLogHeader;
  for (const auto& r : rows) {
    table.rows.push_back({io::format_int(r.timestep), io::format_int(r.episode),
                          io::format_double(r.episode_return),
                          io::format_double(r.episode_final_distance_m)});
  }
  return csv::emit(table);
}

TrainingLog TrainingLog::from_csv(std::string_view text) {
  const auto table = csv::parse(text);
  if (table.header != kLogHeader) throw ParseError("training log: unexpected header");
  TrainingLog log;
  for (const auto& row : table.rows) {
    log.rows.push_back({io::parse_int(row[0]), io::parse_int(row[1]), io::parse_double(row[2]),
                        io::parse_double(row[3])});
  }
  return log;
}

// ---------------------------------------------------------------- training loop

namespace {

struct EpisodeTracker {
  TrainingLog* log;
  std::int64_t episode = 0;
  double ret = 0.0;

  void add(double r) { ret += r; }
  void finish(std::int64_t timestep, double final_distance) {
    log->rows.push_back({timestep, episode++, ret, final_distance});
    ret = 0.0;
  }
};

class CheckpointCursor {
 public:
  explicit CheckpointCursor(const CheckpointHook* hook) : hook_(hook) {
    if (hook_) {
      steps_ = hook_->steps;
      std::sort(steps_.begin(), steps_.end());
    }
  }

  // Returns false when the hook asks training to stop.
  bool after_step(std::int64_t t, const nn::GaussianPolicy& policy) {
    bool keep_going = true;
    while (hook_ && next_ < steps_.size() && steps_[next_] <= t) {
      if (steps_[next_] == t && keep_going) keep_going = hook_->on_checkpoint(t, policy);
      ++next_;
    }
    return keep_going;
  }

  bool wants(std::int64_t t) const { return hook_ && next_ < steps_.size() && steps_[next_] == t; }

 private:
  const CheckpointHook* hook_;
  std::vector<std::int64_t> steps_;
  std::size_t next_ = 0;
};

void train_random(env::EnvInstance& env, std::uint64_t seed, std::int64_t n_timesteps,
                  const CheckpointHook* hook, TrainResult& result) {
  std::mt19937_64 noise_rng(seed + kNoiseSeedOffset);
  const auto& cfg = env.config();
  result.policy = nn::zero_policy(cfg.obs_dim(), cfg.action_dim());
  EpisodeTracker tracker{&result.log};
  CheckpointCursor checkpoints(hook);
  auto obs = env.reset(seed);
  for (std::int64_t t = 1; t <= n_timesteps; ++t) {
    const auto action = result.policy.act(obs, false, noise_rng);
    auto step = env.step(action);
    tracker.add(step.reward);
    obs = std::move(step.observation);
    if (step.done) {
      tracker.finish(t, step.info.distance);
      obs = env.reset();
    }
    result.timesteps_done = t;
    if (!checkpoints.after_step(t, result.policy)) {
      result.stopped_early = true;
      return;
    }
  }
}

void train_ppo(env::EnvInstance& env, std::uint64_t seed, const PpoConfig& cfg,
               const CheckpointHook* hook, TrainResult& result) {
  const auto& env_cfg = env.config();
  const std::size_t obs_dim = env_cfg.obs_dim();
  const std::size_t act_dim = env_cfg.action_dim();

  std::mt19937_64 net_rng(seed + kNetSeedOffset);
  std::mt19937_64 noise_rng(seed + kNoiseSeedOffset);
  ActorCritic model = make_actor_critic(obs_dim, act_dim, cfg, net_rng);
  PpoOptimizer opt(model, cfg.lr);
  result.policy = model.policy;

  EpisodeTracker tracker{&result.log};
  CheckpointCursor checkpoints(hook);
  auto obs = env.reset(seed);
  std::int64_t t = 0;

  while (t < cfg.n_timesteps) {
    const std::int64_t len = std::min(cfg.rollout_len, cfg.n_timesteps - t);
    RolloutBatch batch;
    batch.obs.resize(len, static_cast<Eigen::Index>(obs_dim));
    batch.actions.resize(len, static_cast<Eigen::Index>(act_dim));
    batch.old_log_probs.resize(static_cast<std::size_t>(len));
    std::vector<double> rewards(static_cast<std::size_t>(len));
    std::vector<double> values(static_cast<std::size_t>(len));
    std::vector<std::uint8_t> dones(static_cast<std::size_t>(len));

    for (std::int64_t k = 0; k < len; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const auto idx = static_cast<std::size_t>(k);
      for (std::size_t j = 0; j < obs_dim; ++j) batch.obs(row, static_cast<Eigen::Index>(j)) = obs[j];
      const auto mean = model.policy.mean_action(obs);
      auto sample = nn::gaussian_sample(mean, model.policy.log_std, noise_rng);
      for (std::size_t j = 0; j < act_dim; ++j) {
        batch.actions(row, static_cast<Eigen::Index>(j)) = sample.action[j];
      }
      batch.old_log_probs[idx] = sample.log_prob;
      values[idx] = model.value.forward(obs)[0];

      auto step = env.step(sample.action);
      rewards[idx] = step.reward;
      dones[idx] = step.done ? 1 : 0;
      // Episodes end on the time limit only: bootstrap from the final state.
      if (step.done) rewards[idx] += cfg.gamma * model.value.forward(step.observation)[0];
      tracker.add(step.reward);
      obs = std::move(step.observation);
      ++t;
      if (step.done) {
        tracker.finish(t, step.info.distance);
        obs = env.reset();
      }
      result.timesteps_done = t;
      if (!checkpoints.after_step(t, model.policy)) {
        result.policy = model.policy;
        result.stopped_early = true;
        return;
      }
    }

    const double next_value = model.value.forward(obs)[0];
    auto gae = compute_gae(rewards, values, next_value, dones, cfg.gamma, cfg.gae_lambda);
    batch.advantages = std::move(gae.advantages);
    batch.returns = std::move(gae.returns);
    ppo_update(model, opt, batch, cfg, noise_rng);
    result.policy = model.policy;
  }
}

void train_td3(env::EnvInstance& env, std::uint64_t seed, const Td3Config& cfg,
               const CheckpointHook* hook, TrainResult& result) {
  const auto& env_cfg = env.config();
  const std::size_t obs_dim = env_cfg.obs_dim();
  const std::size_t act_dim = env_cfg.action_dim();

  std::mt19937_64 net_rng(seed + kNetSeedOffset);
  std::mt19937_64 noise_rng(seed + kNoiseSeedOffset);
  Td3Nets nets = make_td3_nets(obs_dim, act_dim, cfg, net_rng);
  Td3Optimizers opt(nets, cfg.lr);
  const auto capacity = static_cast<std::size_t>(
      std::max(cfg.batch_size, std::min(cfg.buffer_size, cfg.n_timesteps)));
  ReplayBuffer buffer(capacity, obs_dim, act_dim);
  auto current_policy = [&] { return nn::GaussianPolicy{nets.actor, {}}; };
  result.policy = current_policy();

  EpisodeTracker tracker{&result.log};
  CheckpointCursor checkpoints(hook);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto obs = env.reset(seed);

  for (std::int64_t t = 1; t <= cfg.n_timesteps; ++t) {
    std::vector<double> action(act_dim);
    if (t <= cfg.learning_starts) {
      for (auto& a : action) a = uniform(noise_rng);
    } else {
      action = nets.actor.forward(obs);
      for (auto& a : action) a = std::clamp(a + cfg.explore_noise * normal(noise_rng), -1.0, 1.0);
    }
    auto step = env.step(action);
    tracker.add(step.reward);
    // Episodes only end on the time limit, so the stored transition bootstraps.
    buffer.push(obs, action, step.reward, step.observation, false);
    obs = std::move(step.observation);
    if (step.done) {
      tracker.finish(t, step.info.distance);
      obs = env.reset();
    }
    if (t >= cfg.learning_starts && buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      td3_update(nets, opt, buffer, cfg, noise_rng, t);
    }
    result.timesteps_done = t;
    if (checkpoints.wants(t)) result.policy = current_policy();
    if (!checkpoints.after_step(t, result.policy)) {
      result.stopped_early = true;
      return;
    }
  }
  result.policy = current_policy();
}

}  // namespace

TrainResult train(Algo algo, const std::string& env_id, std::uint64_t seed,
                  const json& hyperparams, std::int64_t n_timesteps, const CheckpointHook* hook) {
  if (n_timesteps < 1) throw ValidationError("n_timesteps must be >= 1");
  env::EnvInstance env(env::registry_lookup(env_id), seed);

  TrainResult result;
  try {
    switch (algo) {
      case Algo::Random:
        resolve_hyperparams(algo, hyperparams);
        train_random(env, seed, n_timesteps, hook, result);
        break;
      case Algo::PPO: {
        auto cfg = PpoConfig::from_json(hyperparams);
        cfg.n_timesteps = n_timesteps;
        train_ppo(env, seed, cfg, hook, result);
        break;
      }
      case Algo::TD3: {
        auto cfg = Td3Config::from_json(hyperparams);
        cfg.n_timesteps = n_timesteps;
        train_td3(env, seed, cfg, hook, result);
        break;
      }
    }
  } catch (const NumericError& e) {
    result.failed = true;
    result.failure_message = e.what();
  } catch (const DomainError& e) {
    result.failed = true;
    result.failure_message = e.what();
  }
  return result;
}

}  // namespace rlreach::agents
