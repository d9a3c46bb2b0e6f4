#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlreach/experiment.hpp"
#include "rlreach/policy.hpp"
#include "rlreach/reach_env.hpp"

namespace rlreach::evaluation {

struct EpisodeRecord {
  double episode_return = 0.0;
  double final_distance_m = 0.0;
  std::vector<bool> success_flags;  // one per env success threshold
};

// Called right after each episode reset; lets tests pin the goal.
using EpisodeHook = std::function<void(env::EnvInstance& env, std::int64_t episode)>;

// Episode k is reset with seed + k. Deterministic mode acts with the policy mean.
std::vector<EpisodeRecord> evaluate_policy(const nn::GaussianPolicy& policy,
                                           const std::string& env_id, std::int64_t n_episodes,
                                           bool deterministic, std::uint64_t seed,
                                           const EpisodeHook& hook = {});

struct EvalMetrics {
  double mean_return = 0.0;
  double std_return = 0.0;  // population std over per-seed mean returns
  std::vector<double> thresholds_mm;
  std::vector<double> success_ratio;  // per threshold, over all episodes
  double mean_final_distance_mm = 0.0;
  std::int64_t n_episodes = 0;  // per seed
  std::int64_t n_seeds = 0;
};

EvalMetrics aggregate_across_seeds(const std::vector<std::vector<EpisodeRecord>>& per_seed,
                                   std::vector<double> thresholds_mm = {5.0, 10.0, 20.0, 50.0});

struct EpisodeLogRow {
  std::int64_t step = 0;
  std::vector<double> angles;
  env::Vec3 ee = env::Vec3::Zero();
  env::Vec3 goal = env::Vec3::Zero();
  std::vector<double> action;
  double reward = 0.0;
  double distance_m = 0.0;
  double velocity = 0.0;      // distance_t - distance_{t-1}, 0 at t = 0
  double acceleration = 0.0;  // velocity_t - velocity_{t-1}, 0 at t <= 1
};

struct EpisodeLog {
  std::size_t n_joints = 0;
  std::vector<EpisodeLogRow> rows;

  std::vector<std::string> header() const;
  std::string to_csv() const;
  static EpisodeLog from_csv(std::string_view text);
};

EpisodeLog log_episode(const nn::GaussianPolicy& policy, const std::string& env_id,
                       std::uint64_t seed, bool deterministic = true,
                       const EpisodeHook& hook = {});

// ------------------------------------------------------------------ benchmark.csv

const std::vector<std::string>& benchmark_header();

struct BenchmarkRow {
  std::int64_t exp_id = 0;
  std::string env_id;
  std::string algo;
  std::int64_t n_timesteps = 0;
  std::int64_t n_seeds = 0;
  std::int64_t n_eval_episodes = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double success_ratio_5mm = 0.0;
  double success_ratio_10mm = 0.0;
  double success_ratio_20mm = 0.0;
  double success_ratio_50mm = 0.0;
  double mean_final_distance_mm = 0.0;
  double train_walltime_s = 0.0;
  std::string env_config_json;
  std::string hyperparams_json;

  bool operator==(const BenchmarkRow&) const = default;

  // Numeric column by header name; throws ValidationError naming valid metrics.
  double metric(const std::string& name) const;
};

const std::vector<std::string>& numeric_benchmark_columns();

std::string emit_benchmark(const std::vector<BenchmarkRow>& rows);
// Throws CorruptionError on a wrong header or malformed row.
std::vector<BenchmarkRow> parse_benchmark(std::string_view text);
std::vector<BenchmarkRow> read_benchmark(const std::filesystem::path& path);

BenchmarkRow make_benchmark_row(const EvalMetrics& metrics, const experiment::ExperimentRecord& record,
                                double train_walltime_s);

// Insert-or-replace keyed on exp_id under an exclusive lock; rows stay sorted by exp_id.
void append_benchmark_row(const experiment::Workspace& ws, const EvalMetrics& metrics,
                          const experiment::ExperimentRecord& record, double train_walltime_s);
void upsert_benchmark_row(const experiment::Workspace& ws, const BenchmarkRow& row);

// Fixed offset from the run seed for the evaluation env.
inline constexpr std::uint64_t kEvalSeedOffset = 3000;

struct ExperimentEvaluation {
  EvalMetrics metrics;
  std::vector<std::int64_t> seeds_evaluated;
  double train_walltime_s = 0.0;
};

// Evaluates every completed seed of an experiment (eval seed = run seed + 3000).
ExperimentEvaluation evaluate_experiment(const experiment::Workspace& ws,
                                         const experiment::ExperimentRecord& record,
                                         std::int64_t n_episodes, bool deterministic = true);

}  // namespace rlreach::evaluation
