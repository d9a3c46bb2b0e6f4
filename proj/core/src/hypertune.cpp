#include "rlreach/hypertune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "rlreach/csv.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/evaluation.hpp"
#include "rlreach/io.hpp"

namespace rlreach::tune {

namespace fs = std::filesystem;
using nlohmann::json;

void SearchSpace::validate() const {
  for (const auto& [name, dim] : dimensions) {
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Categorical>) {
            if (d.values.empty()) throw ValidationError("dimension '" + name + "' has no categories");
          } else {
            if (!(d.lo < d.hi)) throw ValidationError("dimension '" + name + "' needs lo < hi");
            if constexpr (std::is_same_v<T, LogUniform>) {
              if (!(d.lo > 0.0)) throw ValidationError("log-uniform dimension '" + name + "' needs lo > 0");
            }
          }
        },
        dim);
  }
}

SearchSpace default_space(agents::Algo algo) {
  SearchSpace s;
  switch (algo) {
    case agents::Algo::PPO:
      s.dimensions["lr"] = LogUniform{1e-5, 1e-2};
      s.dimensions["gamma"] = Categorical{{0.95, 0.99, 0.999}};
      s.dimensions["clip_range"] = Uniform{0.1, 0.3};
      s.dimensions["rollout_len"] = Categorical{{512, 1024, 2048}};
      break;
    case agents::Algo::TD3:
      s.dimensions["lr"] = LogUniform{1e-5, 1e-2};
      s.dimensions["tau"] = Uniform{0.001, 0.02};
      s.dimensions["policy_noise"] = Uniform{0.1, 0.5};
      break;
    case agents::Algo::Random:
      throw ValidationError("the random agent has no hyperparameters to tune");
  }
  return s;
}

json sample_config(const SearchSpace& space, std::mt19937_64& rng) {
  json out = json::object();
  for (const auto& [name, dim] : space.dimensions) {
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, LogUniform>) {
            std::uniform_real_distribution<double> u(std::log(d.lo), std::log(d.hi));
            out[name] = std::clamp(std::exp(u(rng)), d.lo, d.hi);
          } else if constexpr (std::is_same_v<T, Uniform>) {
            std::uniform_real_distribution<double> u(d.lo, d.hi);
            out[name] = u(rng);
          } else {
            std::uniform_int_distribution<std::size_t> pick(0, d.values.size() - 1);
            out[name] = d.values[pick(rng)];
          }
        },
        dim);
  }
  return out;
}

std::string to_string(TrialState s) {
  switch (s) {
    case TrialState::Running: return "Running";
    case TrialState::Pruned: return "Pruned";
    case TrialState::Complete: return "Complete";
    case TrialState::Failed: return "Failed";
  }
  return "?";
}

std::optional<double> Trial::value_at(std::int64_t step) const {
  for (const auto& [s, v] : intermediate_values) {
    if (s == step) return v;
  }
  return std::nullopt;
}

bool should_prune(const std::vector<Trial>& history, const Trial& current, std::int64_t step,
                  std::size_t min_trials) {
  const auto value = current.value_at(step);
  if (!value) throw ContractViolation("should_prune: current trial has no value at this step");
  std::vector<double> priors;
  for (const auto& t : history) {
    if (t.state != TrialState::Complete || t.trial_id == current.trial_id) continue;
    if (auto v = t.value_at(step)) priors.push_back(*v);
  }
  if (priors.size() < min_trials || priors.empty()) return false;
  std::sort(priors.begin(), priors.end());
  const std::size_t n = priors.size();
  const double median = n % 2 == 1 ? priors[n / 2] : 0.5 * (priors[n / 2 - 1] + priors[n / 2]);
  return *value < median;
}

std::vector<std::int64_t> checkpoint_steps(std::int64_t total, std::int64_t checkpoints) {
  if (checkpoints < 1) throw ValidationError("checkpoints must be >= 1");
  if (total < checkpoints) throw ValidationError("timesteps per trial must be >= checkpoints");
  std::vector<std::int64_t> steps;
  for (std::int64_t i = 1; i <= checkpoints; ++i) steps.push_back(total * i / checkpoints);
  return steps;
}

TrialContext::TrialContext(Trial& trial, std::vector<std::int64_t> checkpoints, std::uint64_t seed,
                           PruneCheck prune_check)
    : trial_(trial), checkpoints_(std::move(checkpoints)), seed_(seed),
      prune_check_(std::move(prune_check)) {}

bool TrialContext::report(std::int64_t step, double value) {
  if (trial_.state != TrialState::Running) return true;
  if (!trial_.intermediate_values.empty() && step <= trial_.intermediate_values.back().first) {
    throw ContractViolation("checkpoint steps must be strictly increasing");
  }
  trial_.intermediate_values.emplace_back(step, value);
  if (!std::isfinite(value)) {
    trial_.state = TrialState::Failed;
    return true;
  }
  if (prune_check_ && prune_check_(trial_, step)) {
    trial_.state = TrialState::Pruned;
    trial_.pruned_at_step = step;
    return true;
  }
  return false;
}

void StudySpec::validate() const {
  if (n_trials < 1) throw ValidationError("n_trials must be >= 1");
  if (checkpoints < 1) throw ValidationError("checkpoints must be >= 1");
  if (timesteps_per_trial < checkpoints) {
    throw ValidationError("timesteps_per_trial must be >= checkpoints");
  }
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  space.validate();
}

Objective training_objective(agents::Algo algo, const std::string& env_id,
                             std::int64_t timesteps_per_trial, std::int64_t eval_episodes) {
  return [=](const json& config, TrialContext& ctx) {
    agents::CheckpointHook hook;
    hook.steps = ctx.checkpoints();
    hook.on_checkpoint = [&](std::int64_t t, const nn::GaussianPolicy& policy) {
      const auto episodes = evaluation::evaluate_policy(policy, env_id, eval_episodes, true,
                                                        ctx.seed() + evaluation::kEvalSeedOffset);
      double sum = 0.0;
      for (const auto& e : episodes) sum += e.episode_return;
      return !ctx.report(t, sum / static_cast<double>(episodes.size()));
    };
    const auto result = agents::train(algo, env_id, ctx.seed(), config, timesteps_per_trial, &hook);
    if (result.failed && ctx.trial().state == TrialState::Running) {
      const auto& done = ctx.trial().intermediate_values;
      const std::int64_t step = done.empty() ? ctx.checkpoints().front() : done.back().first + 1;
      ctx.report(step, -std::numeric_limits<double>::infinity());
    }
  };
}

StudyReport run_study(const StudySpec& spec, const Objective& objective) {
  spec.validate();
  const auto steps = checkpoint_steps(spec.timesteps_per_trial, spec.checkpoints);

  std::mt19937_64 sampler(spec.seed);
  std::vector<Trial> trials(static_cast<std::size_t>(spec.n_trials));
  for (std::int64_t i = 0; i < spec.n_trials; ++i) {
    trials[static_cast<std::size_t>(i)].trial_id = i;
    trials[static_cast<std::size_t>(i)].config = sample_config(spec.space, sampler);
  }

  std::mutex history_mutex;
  std::vector<Trial> finished;
  auto prune_check = [&](const Trial& current, std::int64_t step) {
    std::lock_guard lock(history_mutex);
    return should_prune(finished, current, step, spec.min_trials_before_prune);
  };

  auto run_trial = [&](Trial& trial) {
    TrialContext ctx(trial, steps, spec.seed + static_cast<std::uint64_t>(trial.trial_id), prune_check);
    try {
      objective(trial.config, ctx);
    } catch (const NumericError&) {
      trial.state = TrialState::Failed;
    } catch (const DomainError&) {
      trial.state = TrialState::Failed;
    }
    if (trial.state == TrialState::Running) {
      const bool all_reported = trial.intermediate_values.size() == steps.size() &&
                                trial.intermediate_values.back().first == steps.back();
      if (all_reported) {
        trial.state = TrialState::Complete;
        trial.final_value = trial.intermediate_values.back().second;
      } else {
        trial.state = TrialState::Failed;
      }
    }
    std::lock_guard lock(history_mutex);
    finished.push_back(trial);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < trials.size(); i = next++) run_trial(trials[i]);
  };
  {
    const auto n_workers = std::min(spec.parallelism, trials.size());
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n_workers; ++i) pool.emplace_back(worker);
    worker();
  }

  StudyReport report;
  report.trials = std::move(trials);
  for (const auto& t : report.trials) {
    if (t.state != TrialState::Complete) continue;
    if (!report.best_value || *t.final_value > *report.best_value) {
      report.best_value = t.final_value;
      report.best_trial_id = t.trial_id;
      report.best_config = t.config;
    }
  }
  if (!report.best_value) throw StudyError("no completed trial");
  return report;
}

StudyReport run_study(const StudySpec& spec) {
  return run_study(spec, training_objective(spec.algo, spec.env_id, spec.timesteps_per_trial));
}

namespace {

std::string format_value(const json& v) {
  if (v.is_number_integer()) return io::format_int(v.get<std::int64_t>());
  if (v.is_number()) return io::format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string trials_csv(const StudyReport& report, const SearchSpace& space) {
  csv::Table table;
  table.header = {"trial_id", "state", "final_value"};
  for (const auto& [name, dim] : space.dimensions) table.header.push_back(name);
  table.header.emplace_back("pruned_at_step");
  for (const auto& t : report.trials) {
    std::vector<std::string> row{io::format_int(t.trial_id), to_string(t.state),
                                 t.final_value ? io::format_double(*t.final_value) : ""};
    for (const auto& [name, dim] : space.dimensions) {
      row.push_back(t.config.contains(name) ? format_value(t.config.at(name)) : "");
    }
    row.push_back(t.pruned_at_step ? io::format_int(*t.pruned_at_step) : "");
    table.rows.push_back(std::move(row));
  }
  return csv::emit(table);
}

fs::path write_study(const fs::path& studies_dir, const StudyReport& report, const SearchSpace& space) {
  std::error_code ec;
  fs::create_directories(studies_dir, ec);
  if (ec) throw IoError("cannot create " + studies_dir.string() + ": " + ec.message());
  std::int64_t next = 1;
  for (const auto& entry : fs::directory_iterator(studies_dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("study_", 0) != 0) continue;
    try {
      next = std::max(next, io::parse_int(name.substr(6)) + 1);
    } catch (const ParseError&) {
    }
  }
  fs::path dir;
  for (;; ++next) {
    dir = studies_dir / ("study_" + std::to_string(next));
    if (fs::create_directory(dir, ec)) break;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  io::write_file_atomic(dir / "trials.csv", trials_csv(report, space));
  io::write_json_atomic(dir / "best_config.json", report.best_config);
  return dir;
}

}  // namespace rlreach::tune
