#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlreach/agents.hpp"

namespace rlreach::experiment {

enum class Status { Created, Running, Complete, Failed };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

struct ExperimentRecord {
  std::int64_t exp_id = 0;
  std::string algo;
  std::string env_id;
  std::int64_t n_timesteps = 0;
  std::int64_t n_seeds = 1;
  std::uint64_t base_seed = 0;
  nlohmann::json hyperparams = nlohmann::json::object();
  std::string created_at;
  Status status = Status::Created;
  // Keys found in config.json that this version does not know; written back unchanged.
  nlohmann::json extras = nlohmann::json::object();

  std::uint64_t seed_for(std::int64_t k) const { return base_seed + static_cast<std::uint64_t>(k); }

  nlohmann::json to_json() const;
  static ExperimentRecord from_json(const nlohmann::json& doc);
  bool operator==(const ExperimentRecord&) const = default;
};

// The filesystem is the registry: <root>/exp_<id>/ directories.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path exp_dir(std::int64_t exp_id) const;
  std::filesystem::path config_path(std::int64_t exp_id) const;
  std::filesystem::path seed_dir(std::int64_t exp_id, std::int64_t k) const;
  std::filesystem::path benchmark_path() const { return root_ / "benchmark.csv"; }
  std::filesystem::path studies_dir() const { return root_ / "studies"; }
  std::filesystem::path figures_dir() const { return root_ / "figures"; }

  std::vector<std::int64_t> experiment_ids() const;  // ascending

 private:
  std::filesystem::path root_;
};

// Validates everything before touching the filesystem, then allocates
// exp_id = max(existing) + 1 (or 1) and writes config.json.
ExperimentRecord create_experiment(const Workspace& ws, const std::string& algo,
                                   const std::string& env_id, std::int64_t n_timesteps,
                                   std::int64_t n_seeds, std::uint64_t base_seed,
                                   const nlohmann::json& hyperparams);

ExperimentRecord load_experiment(const Workspace& ws, std::int64_t exp_id);
void save_experiment(const Workspace& ws, const ExperimentRecord& record);

using Trainer = std::function<agents::TrainResult(
    agents::Algo, const std::string& env_id, std::uint64_t seed, const nlohmann::json& hyperparams,
    std::int64_t n_timesteps)>;

struct RunOptions {
  int parallelism = 1;
  bool overwrite = false;
  Trainer trainer;  // defaults to agents::train
};

// Trains seeds base_seed + k, k = 0..n_seeds-1, at most `parallelism` at a time.
// Writes seed_<k>/{training_log.csv, policy.json, run_meta.json}.
ExperimentRecord run_experiment(const Workspace& ws, std::int64_t exp_id,
                                const RunOptions& options = {});

struct RunMeta {
  std::int64_t k = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::string status;  // "complete" or "failed"
  std::string message;
  std::int64_t timesteps_done = 0;

  nlohmann::json to_json() const;
  static RunMeta from_json(const nlohmann::json& doc);
};

std::optional<RunMeta> read_run_meta(const Workspace& ws, std::int64_t exp_id, std::int64_t k);

// Seed indices whose run finished successfully.
std::vector<std::int64_t> completed_seeds(const Workspace& ws, const ExperimentRecord& record);

}  // namespace rlreach::experiment
