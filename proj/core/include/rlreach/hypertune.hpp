#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlreach/agents.hpp"

namespace rlreach::tune {

struct LogUniform {
  double lo;
  double hi;
};

struct Uniform {
  double lo;
  double hi;
};

struct Categorical {
  std::vector<nlohmann::json> values;
};

using Dimension = std::variant<LogUniform, Uniform, Categorical>;

struct SearchSpace {
  std::map<std::string, Dimension> dimensions;

  void validate() const;
};

SearchSpace default_space(agents::Algo algo);

// One draw per dimension, in key order.
nlohmann::json sample_config(const SearchSpace& space, std::mt19937_64& rng);

enum class TrialState { Running, Pruned, Complete, Failed };
std::string to_string(TrialState s);

struct Trial {
  std::int64_t trial_id = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::pair<std::int64_t, double>> intermediate_values;
  std::optional<double> final_value;
  TrialState state = TrialState::Running;
  std::optional<std::int64_t> pruned_at_step;

  std::optional<double> value_at(std::int64_t step) const;
};

inline constexpr std::size_t kMinTrialsBeforePrune = 5;

// Median rule over the Complete trials in `history` that reported at `step`.
bool should_prune(const std::vector<Trial>& history, const Trial& current, std::int64_t step,
                  std::size_t min_trials = kMinTrialsBeforePrune);

// `checkpoints` evenly spaced timesteps ending at `total`.
std::vector<std::int64_t> checkpoint_steps(std::int64_t total, std::int64_t checkpoints);

class TrialContext {
 public:
  using PruneCheck = std::function<bool(const Trial&, std::int64_t)>;

  TrialContext(Trial& trial, std::vector<std::int64_t> checkpoints, std::uint64_t seed,
               PruneCheck prune_check);

  // Records the value; returns true when the trial should stop (pruned).
  bool report(std::int64_t step, double value);

  const std::vector<std::int64_t>& checkpoints() const { return checkpoints_; }
  std::uint64_t seed() const { return seed_; }
  const Trial& trial() const { return trial_; }
  bool pruned() const { return trial_.state == TrialState::Pruned; }

 private:
  Trial& trial_;
  std::vector<std::int64_t> checkpoints_;
  std::uint64_t seed_;
  PruneCheck prune_check_;
};

// Trains with `config` and reports at each checkpoint. A non-finite report marks the trial Failed.
using Objective = std::function<void(const nlohmann::json& config, TrialContext& ctx)>;

struct StudySpec {
  agents::Algo algo = agents::Algo::PPO;
  std::string env_id;
  SearchSpace space;
  std::int64_t n_trials = 1;
  std::int64_t timesteps_per_trial = 1;
  std::int64_t checkpoints = 1;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;  // > 1 gives up run-to-run determinism
  std::size_t min_trials_before_prune = kMinTrialsBeforePrune;

  void validate() const;
};

struct StudyReport {
  std::vector<Trial> trials;
  std::int64_t best_trial_id = 0;
  nlohmann::json best_config;
  std::optional<double> best_value;
};

// Mean deterministic eval return over 20 episodes at every checkpoint.
Objective training_objective(agents::Algo algo, const std::string& env_id,
                             std::int64_t timesteps_per_trial, std::int64_t eval_episodes = 20);

// Throws StudyError("no completed trial") when nothing completes.
StudyReport run_study(const StudySpec& spec, const Objective& objective);
StudyReport run_study(const StudySpec& spec);

std::string trials_csv(const StudyReport& report, const SearchSpace& space);

// Writes studies/study_<id>/{trials.csv,best_config.json}; returns the study directory.
std::filesystem::path write_study(const std::filesystem::path& studies_dir, const StudyReport& report,
                                  const SearchSpace& space);

}  // namespace rlreach::tune
