#include "rlreach/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "rlreach/csv.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/io.hpp"

namespace rlreach::evaluation {

namespace fs = std::filesystem;

namespace {

void check_dimensions(const nn::GaussianPolicy& policy, const env::EnvConfig& cfg) {
  if (policy.obs_dim() != cfg.obs_dim() || policy.action_dim() != cfg.action_dim()) {
    throw ValidationError("policy dimensions (obs " + std::to_string(policy.obs_dim()) + ", action " +
                          std::to_string(policy.action_dim()) + ") do not match env '" + cfg.env_id +
                          "' (obs " + std::to_string(cfg.obs_dim()) + ", action " +
                          std::to_string(cfg.action_dim()) + ")");
  }
}

std::vector<double> clamp_unit(std::vector<double> a) {
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

}  // namespace

std::vector<EpisodeRecord> evaluate_policy(const nn::GaussianPolicy& policy,
                                           const std::string& env_id, std::int64_t n_episodes,
                                           bool deterministic, std::uint64_t seed,
                                           const EpisodeHook& hook) {
  if (n_episodes < 1) throw ValidationError("n_episodes must be >= 1");
  env::EnvInstance env(env::registry_lookup(env_id), seed);
  check_dimensions(policy, env.config());
  std::mt19937_64 action_rng(seed);

  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(n_episodes));
  for (std::int64_t k = 0; k < n_episodes; ++k) {
    auto obs = env.reset(seed + static_cast<std::uint64_t>(k));
    if (hook) {
      hook(env, k);
      obs = env.observation();
    }
    EpisodeRecord rec;
    env::StepResult step;
    do {
      step = env.step(policy.act(obs, deterministic, action_rng));
      rec.episode_return += step.reward;
      obs = std::move(step.observation);
    } while (!step.done);
    rec.final_distance_m = step.info.distance;
    rec.success_flags = step.info.success_flags;
    records.push_back(std::move(rec));
  }
  return records;
}

EvalMetrics aggregate_across_seeds(const std::vector<std::vector<EpisodeRecord>>& per_seed,
                                   std::vector<double> thresholds_mm) {
  if (per_seed.empty()) throw ValidationError("aggregate_across_seeds: no seeds");
  const std::size_t n_ep = per_seed.front().size();
  if (n_ep == 0) throw ValidationError("aggregate_across_seeds: no episodes");
  for (const auto& seed : per_seed) {
    if (seed.size() != n_ep) {
      throw ValidationError("aggregate_across_seeds: seeds have different episode counts");
    }
    for (const auto& ep : seed) {
      if (ep.success_flags.size() != thresholds_mm.size()) {
        throw ValidationError("aggregate_across_seeds: success flag count does not match thresholds");
      }
    }
  }

  EvalMetrics m;
  m.thresholds_mm = std::move(thresholds_mm);
  m.success_ratio.assign(m.thresholds_mm.size(), 0.0);
  m.n_episodes = static_cast<std::int64_t>(n_ep);
  m.n_seeds = static_cast<std::int64_t>(per_seed.size());

  const double total = static_cast<double>(n_ep * per_seed.size());
  std::vector<double> seed_means;
  double sum_return = 0.0;
  double sum_distance = 0.0;
  std::vector<std::size_t> successes(m.thresholds_mm.size(), 0);
  for (const auto& seed : per_seed) {
    double seed_sum = 0.0;
    for (const auto& ep : seed) {
      seed_sum += ep.episode_return;
      sum_distance += ep.final_distance_m;
      for (std::size_t t = 0; t < successes.size(); ++t) successes[t] += ep.success_flags[t] ? 1 : 0;
    }
    sum_return += seed_sum;
    seed_means.push_back(seed_sum / static_cast<double>(n_ep));
  }
  m.mean_return = sum_return / total;
  double grand = 0.0;
  for (double v : seed_means) grand += v;
  grand /= static_cast<double>(seed_means.size());
  double var = 0.0;
  for (double v : seed_means) var += (v - grand) * (v - grand);
  m.std_return = std::sqrt(var / static_cast<double>(seed_means.size()));
  for (std::size_t t = 0; t < successes.size(); ++t) {
    m.success_ratio[t] = static_cast<double>(successes[t]) / total;
  }
  m.mean_final_distance_mm = 1000.0 * sum_distance / total;
  return m;
}

// ------------------------------------------------------------------ episode log

std::vector<std::string> EpisodeLog::header() const {
  std::vector<std::string> h{"step"};
  for (std::size_t i = 1; i <= n_joints; ++i) h.push_back("q" + std::to_string(i));
  for (const char* c : {"ee_x", "ee_y", "ee_z", "goal_x", "goal_y", "goal_z"}) h.emplace_back(c);
  for (std::size_t i = 1; i <= n_joints; ++i) h.push_back("a" + std::to_string(i));
  for (const char* c : {"reward", "distance_m", "velocity", "acceleration"}) h.emplace_back(c);
  return h;
}

std::string EpisodeLog::to_csv() const {
  csv::Table table;
  table.header = header();
  for (const auto& r : rows) {
    std::vector<std::string> f{io::format_int(r.step)};
    for (double q : r.angles) f.push_back(io::format_double(q));
    for (int k = 0; k < 3; ++k) f.push_back(io::format_double(r.ee[k]));
    for (int k = 0; k < 3; ++k) f.push_back(io::format_double(r.goal[k]));
    for (double a : r.action) f.push_back(io::format_double(a));
    for (double v : {r.reward, r.distance_m, r.velocity, r.acceleration}) {
      f.push_back(io::format_double(v));
    }
    table.rows.push_back(std::move(f));
  }
  return csv::emit(table);
}

EpisodeLog EpisodeLog::from_csv(std::string_view text) {
  const auto table = csv::parse(text);
  EpisodeLog log;
  if (table.header.size() < 11 || (table.header.size() - 11) % 2 != 0) {
    throw ParseError("episode log: unexpected column count");
  }
  log.n_joints = (table.header.size() - 11) / 2;
  if (table.header != log.header()) throw ParseError("episode log: unexpected header");
  const std::size_t n = log.n_joints;
  for (const auto& row : table.rows) {
    EpisodeLogRow r;
    std::size_t c = 0;
    r.step = io::parse_int(row[c++]);
    for (std::size_t i = 0; i < n; ++i) r.angles.push_back(io::parse_double(row[c++]));
    for (int k = 0; k < 3; ++k) r.ee[k] = io::parse_double(row[c++]);
    for (int k = 0; k < 3; ++k) r.goal[k] = io::parse_double(row[c++]);
    for (std::size_t i = 0; i < n; ++i) r.action.push_back(io::parse_double(row[c++]));
    r.reward = io::parse_double(row[c++]);
    r.distance_m = io::parse_double(row[c++]);
    r.velocity = io::parse_double(row[c++]);
    r.acceleration = io::parse_double(row[c++]);
    log.rows.push_back(std::move(r));
  }
  return log;
}

EpisodeLog log_episode(const nn::GaussianPolicy& policy, const std::string& env_id,
                       std::uint64_t seed, bool deterministic, const EpisodeHook& hook) {
  env::EnvInstance env(env::registry_lookup(env_id), seed);
  check_dimensions(policy, env.config());
  std::mt19937_64 action_rng(seed);

  EpisodeLog log;
  log.n_joints = env.config().action_dim();
  auto obs = env.reset(seed);
  if (hook) {
    hook(env, 0);
    obs = env.observation();
  }
  env::StepResult step;
  std::int64_t t = 0;
  do {
    auto action = clamp_unit(policy.act(obs, deterministic, action_rng));
    step = env.step(action);
    EpisodeLogRow row;
    row.step = t;
    row.angles = env.arm_state().angles;
    row.ee = env.arm_state().ee_position;
    row.goal = env.goal();
    row.action = std::move(action);
    row.reward = step.reward;
    row.distance_m = step.info.distance;
    if (t >= 1) row.velocity = row.distance_m - log.rows.back().distance_m;
    if (t >= 2) row.acceleration = row.velocity - log.rows.back().velocity;
    log.rows.push_back(std::move(row));
    obs = std::move(step.observation);
    ++t;
  } while (!step.done);
  return log;
}

// ------------------------------------------------------------------ benchmark.csv

const std::vector<std::string>& benchmark_header() {
  static const std::vector<std::string> header = {
      "exp_id",          "env_id",           "algo",
      "n_timesteps",     "n_seeds",          "n_eval_episodes",
      "mean_return",     "std_return",       "success_ratio_5mm",
      "success_ratio_10mm", "success_ratio_20mm", "success_ratio_50mm",
      "mean_final_distance_mm", "train_walltime_s", "env_config_json",
      "hyperparams_json"};
  return header;
}

const std::vector<std::string>& numeric_benchmark_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> out;
    for (const auto& h : benchmark_header()) {
      if (h != "env_id" && h != "algo" && h != "env_config_json" && h != "hyperparams_json") {
        out.push_back(h);
      }
    }
    return out;
  }();
  return cols;
}

double BenchmarkRow::metric(const std::string& name) const {
  const std::map<std::string, double> values = {
      {"exp_id", static_cast<double>(exp_id)},
      {"n_timesteps", static_cast<double>(n_timesteps)},
      {"n_seeds", static_cast<double>(n_seeds)},
      {"n_eval_episodes", static_cast<double>(n_eval_episodes)},
      {"mean_return", mean_return},
      {"std_return", std_return},
      {"success_ratio_5mm", success_ratio_5mm},
      {"success_ratio_10mm", success_ratio_10mm},
      {"success_ratio_20mm", success_ratio_20mm},
      {"success_ratio_50mm", success_ratio_50mm},
      {"mean_final_distance_mm", mean_final_distance_mm},
      {"train_walltime_s", train_walltime_s}};
  auto it = values.find(name);
  if (it == values.end()) {
    std::string valid;
    for (const auto& c : numeric_benchmark_columns()) valid += (valid.empty() ? "" : ", ") + c;
    throw ValidationError("unknown metric '" + name + "'; numeric columns: " + valid);
  }
  return it->second;
}

std::string emit_benchmark(const std::vector<BenchmarkRow>& rows) {
  csv::Table table;
  table.header = benchmark_header();
  for (const auto& r : rows) {
    table.rows.push_back({io::format_int(r.exp_id), r.env_id, r.algo, io::format_int(r.n_timesteps),
                          io::format_int(r.n_seeds), io::format_int(r.n_eval_episodes),
                          io::format_double(r.mean_return), io::format_double(r.std_return),
                          io::format_double(r.success_ratio_5mm),
                          io::format_double(r.success_ratio_10mm),
                          io::format_double(r.success_ratio_20mm),
                          io::format_double(r.success_ratio_50mm),
                          io::format_double(r.mean_final_distance_mm),
                          io::format_double(r.train_walltime_s), r.env_config_json,
                          r.hyperparams_json});
  }
  return csv::emit(table);
}

std::vector<BenchmarkRow> parse_benchmark(std::string_view text) {
  csv::Table table;
  try {
    table = csv::parse(text);
  } catch (const ParseError& e) {
    throw CorruptionError(std::string("benchmark.csv is malformed: ") + e.what());
  }
  if (table.header != benchmark_header()) {
    throw CorruptionError("benchmark.csv has an unexpected header");
  }
  std::vector<BenchmarkRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    try {
      BenchmarkRow r;
      r.exp_id = io::parse_int(f[0]);
      r.env_id = f[1];
      r.algo = f[2];
      r.n_timesteps = io::parse_int(f[3]);
      r.n_seeds = io::parse_int(f[4]);
      r.n_eval_episodes = io::parse_int(f[5]);
      r.mean_return = io::parse_double(f[6]);
      r.std_return = io::parse_double(f[7]);
      r.success_ratio_5mm = io::parse_double(f[8]);
      r.success_ratio_10mm = io::parse_double(f[9]);
      r.success_ratio_20mm = io::parse_double(f[10]);
      r.success_ratio_50mm = io::parse_double(f[11]);
      r.mean_final_distance_mm = io::parse_double(f[12]);
      r.train_walltime_s = io::parse_double(f[13]);
      r.env_config_json = f[14];
      r.hyperparams_json = f[15];
      for (const auto* cell : {&r.env_config_json, &r.hyperparams_json}) {
        if (!nlohmann::json::accept(*cell)) throw ParseError("embedded JSON column does not parse");
      }
      if (!rows.empty() && rows.back().exp_id >= r.exp_id) {
        throw ParseError("exp_id values are not strictly increasing");
      }
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw CorruptionError("benchmark.csv row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<BenchmarkRow> read_benchmark(const fs::path& path) {
  if (!fs::exists(path)) throw LookupError("no benchmark file at " + path.string());
  return parse_benchmark(io::read_file(path));
}

BenchmarkRow make_benchmark_row(const EvalMetrics& metrics,
                                const experiment::ExperimentRecord& record,
                                double train_walltime_s) {
  if (metrics.success_ratio.size() != 4) {
    throw ValidationError("benchmark rows need exactly four success thresholds (5/10/20/50 mm)");
  }
  BenchmarkRow r;
  r.exp_id = record.exp_id;
  r.env_id = record.env_id;
  r.algo = record.algo;
  r.n_timesteps = record.n_timesteps;
  r.n_seeds = metrics.n_seeds;
  r.n_eval_episodes = metrics.n_episodes;
  r.mean_return = metrics.mean_return;
  r.std_return = metrics.std_return;
  r.success_ratio_5mm = metrics.success_ratio[0];
  r.success_ratio_10mm = metrics.success_ratio[1];
  r.success_ratio_20mm = metrics.success_ratio[2];
  r.success_ratio_50mm = metrics.success_ratio[3];
  r.mean_final_distance_mm = metrics.mean_final_distance_mm;
  r.train_walltime_s = train_walltime_s;
  r.env_config_json = env::registry_lookup(record.env_id).to_json().dump();
  r.hyperparams_json = record.hyperparams.dump();
  return r;
}

void upsert_benchmark_row(const experiment::Workspace& ws, const BenchmarkRow& row) {
  fs::create_directories(ws.root());
  io::FileLock lock(ws.root() / "benchmark.csv.lock");
  std::vector<BenchmarkRow> rows;
  if (fs::exists(ws.benchmark_path())) rows = read_benchmark(ws.benchmark_path());
  auto it = std::find_if(rows.begin(), rows.end(),
                         [&](const BenchmarkRow& r) { return r.exp_id == row.exp_id; });
  if (it != rows.end()) {
    *it = row;
  } else {
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(),
            [](const BenchmarkRow& a, const BenchmarkRow& b) { return a.exp_id < b.exp_id; });
  io::write_file_atomic(ws.benchmark_path(), emit_benchmark(rows));
}

void append_benchmark_row(const experiment::Workspace& ws, const EvalMetrics& metrics,
                          const experiment::ExperimentRecord& record, double train_walltime_s) {
  upsert_benchmark_row(ws, make_benchmark_row(metrics, record, train_walltime_s));
}

ExperimentEvaluation evaluate_experiment(const experiment::Workspace& ws,
                                         const experiment::ExperimentRecord& record,
                                         std::int64_t n_episodes, bool deterministic) {
  ExperimentEvaluation out;
  out.seeds_evaluated = experiment::completed_seeds(ws, record);
  if (out.seeds_evaluated.empty()) {
    throw ValidationError("experiment " + std::to_string(record.exp_id) + " has no completed seed runs");
  }
  const auto cfg = env::registry_lookup(record.env_id);
  std::vector<std::vector<EpisodeRecord>> per_seed;
  double wall = 0.0;
  for (auto k : out.seeds_evaluated) {
    const auto policy =
        nn::GaussianPolicy::from_json(io::read_json(ws.seed_dir(record.exp_id, k) / "policy.json"));
    per_seed.push_back(evaluate_policy(policy, record.env_id, n_episodes, deterministic,
                                       record.seed_for(k) + kEvalSeedOffset));
    if (auto meta = experiment::read_run_meta(ws, record.exp_id, k)) wall += meta->wall_time_s;
  }
  out.metrics = aggregate_across_seeds(per_seed, cfg.success_thresholds_mm);
  out.train_walltime_s = wall / static_cast<double>(out.seeds_evaluated.size());
  return out;
}

}  // namespace rlreach::evaluation
