#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rlreach/errors.hpp"
#include "rlreach/evaluation.hpp"
#include "rlreach/experiment.hpp"
#include "rlreach/hypertune.hpp"
#include "rlreach/io.hpp"
#include "rlreach/reach_env.hpp"
#include "rlreach/report.hpp"

namespace rlreach::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_workspace() {
  if (const char* env = std::getenv("RL_REACH_WORKSPACE"); env && *env) return env;
  return "./experiments";
}

// `--hp key=value`; the value is read as JSON when it parses, else as a plain string.
json parse_overrides(const std::vector<std::string>& pairs) {
  json out = json::object();
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("--hp expects key=value, got '" + p + "'");
    }
    const auto key = p.substr(0, eq);
    const auto text = p.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    out[key] = value.is_discarded() ? json(text) : value;
  }
  return out;
}

struct TrainArgs {
  std::string algo, env, workspace;
  std::int64_t n_timesteps = 0, n_seeds = 0;
  std::uint64_t base_seed = 0;
  int parallel = 1;
  std::vector<std::string> hp;
};

struct EvaluateArgs {
  std::string workspace;
  std::int64_t exp_id = 0;
  std::int64_t n_eval_episodes = 100;
  bool log_episode = false;
  bool allow_partial = false;
};

struct BenchmarkArgs {
  std::string workspace;
  std::vector<std::int64_t> exp_ids;
  std::string metric = "mean_return";
};

struct TuneArgs {
  std::string algo, env, workspace;
  std::int64_t n_trials = 0, timesteps_per_trial = 0, checkpoints = 5;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
};

struct PlotArgs {
  std::string workspace;
  std::int64_t exp_id = 0;
  std::size_t window = report::kDefaultSmoothingWindow;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  if (a.parallel < 1) throw ValidationError("--parallel must be >= 1");
  const experiment::Workspace ws(a.workspace);
  const auto record = experiment::create_experiment(ws, a.algo, a.env, a.n_timesteps, a.n_seeds,
                                                    a.base_seed, parse_overrides(a.hp));
  experiment::RunOptions opts;
  opts.parallelism = a.parallel;
  const auto done = experiment::run_experiment(ws, record.exp_id, opts);
  for (std::int64_t k = 0; k < done.n_seeds; ++k) {
    const auto meta = experiment::read_run_meta(ws, done.exp_id, k);
    out << "seed " << k << ": " << (meta ? meta->status : "missing");
    if (meta) out << " (" << std::fixed << std::setprecision(1) << meta->wall_time_s << " s)";
    if (meta && !meta->message.empty()) out << " " << meta->message;
    out << "\n";
  }
  out << "status=" << experiment::to_string(done.status) << "\n";
  out << "exp_id=" << done.exp_id << "\n";
  return done.status == experiment::Status::Complete ? kExitOk : kExitRuntime;
}

void print_metrics(std::ostream& out, const evaluation::ExperimentEvaluation& ev) {
  const auto& m = ev.metrics;
  auto row = [&](const std::string& name, const std::string& value) {
    out << std::left << std::setw(26) << name << value << "\n";
  };
  row("seeds_evaluated", io::format_int(m.n_seeds));
  row("episodes_per_seed", io::format_int(m.n_episodes));
  row("mean_return", io::format_double(m.mean_return));
  row("std_return", io::format_double(m.std_return));
  for (std::size_t t = 0; t < m.thresholds_mm.size(); ++t) {
    std::ostringstream name;
    name << "success_ratio_" << m.thresholds_mm[t] << "mm";
    row(name.str(), io::format_double(m.success_ratio[t]));
  }
  row("mean_final_distance_mm", io::format_double(m.mean_final_distance_mm));
  row("train_walltime_s", io::format_double(ev.train_walltime_s));
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.n_eval_episodes < 1) throw ValidationError("--n-eval-episodes must be >= 1");
  const experiment::Workspace ws(a.workspace);
  const auto record = experiment::load_experiment(ws, a.exp_id);
  if (record.status != experiment::Status::Complete && !a.allow_partial) {
    throw ValidationError("experiment " + std::to_string(a.exp_id) + " is " +
                          experiment::to_string(record.status) +
                          "; pass --allow-partial to evaluate its completed seeds");
  }
  const auto ev = evaluation::evaluate_experiment(ws, record, a.n_eval_episodes, true);
  evaluation::append_benchmark_row(ws, ev.metrics, record, ev.train_walltime_s);
  print_metrics(out, ev);
  out << "benchmark: " << ws.benchmark_path().string() << "\n";

  if (a.log_episode) {
    const auto k = ev.seeds_evaluated.front();
    const auto policy = nn::GaussianPolicy::from_json(
        io::read_json(ws.seed_dir(a.exp_id, k) / "policy.json"));
    const auto log = evaluation::log_episode(policy, record.env_id,
                                             record.seed_for(k) + evaluation::kEvalSeedOffset, true);
    const auto dir = ws.exp_dir(a.exp_id);
    io::write_file_atomic(dir / "episode_eval.csv", log.to_csv());
    const auto fig = report::write_figure(dir / "episode_panels.svg", report::emit_episode_panels(log));
    out << "episode log: " << (dir / "episode_eval.csv").string() << "\n";
    out << "episode panels: " << fig.svg_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
  const experiment::Workspace ws(a.workspace);
  const auto rows = evaluation::read_benchmark(ws.benchmark_path());
  const auto fig = report::emit_benchmark_comparison(rows, a.metric, a.exp_ids);
  const auto written = report::write_figure(ws.figures_dir() / ("benchmark_" + a.metric + ".svg"), fig);
  out << "figure: " << written.svg_path.string() << "\n";
  out << "data: " << written.data_path.string() << "\n";
  return kExitOk;
}

int cmd_tune(const TuneArgs& a, std::ostream& out) {
  if (!env::is_registered(a.env)) throw LookupError("unknown env id '" + a.env + "'");
  tune::StudySpec spec;
  spec.algo = agents::algo_from_string(a.algo);
  spec.env_id = a.env;
  spec.space = tune::default_space(spec.algo);
  spec.n_trials = a.n_trials;
  spec.timesteps_per_trial = a.timesteps_per_trial;
  spec.checkpoints = std::min(a.checkpoints, std::max<std::int64_t>(a.timesteps_per_trial, 1));
  spec.seed = a.seed;
  spec.parallelism = a.parallel;
  spec.validate();
  const experiment::Workspace ws(a.workspace);
  const auto study = tune::run_study(spec);
  const auto dir = tune::write_study(ws.studies_dir(), study, spec.space);
  for (const auto& t : study.trials) {
    out << "trial " << t.trial_id << ": " << tune::to_string(t.state);
    if (t.final_value) out << " value=" << io::format_double(*t.final_value);
    if (t.pruned_at_step) out << " pruned_at=" << *t.pruned_at_step;
    out << "\n";
  }
  out << "best_trial=" << study.best_trial_id << " value=" << io::format_double(*study.best_value) << "\n";
  out << "best_config: " << (dir / "best_config.json").string() << "\n";
  out << "trials: " << (dir / "trials.csv").string() << "\n";
  return kExitOk;
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const experiment::Workspace ws(a.workspace);
  const auto written = report::emit_training_curves(ws, a.exp_id, a.window);
  out << "figure: " << written.svg_path.string() << "\n";
  out << "data: " << written.data_path.string() << "\n";
  return kExitOk;
}

int cmd_list_envs(std::ostream& out) {
  for (const auto& id : env::registered_ids()) {
    const auto cfg = env::registry_lookup(id);
    out << std::left << std::setw(10) << id << " arm=" << cfg.arm->name()
        << " action=" << env::to_string(cfg.action_mode) << " obs=" << env::to_string(cfg.obs_mode)
        << " reward=" << env::to_string(cfg.reward_type) << "\n";
  }
  out << "Append -planar to any id for the 2-DOF planar arm.\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reinforcement learning for robot-arm reaching: train, evaluate, benchmark, tune, plot",
               "rl_reach"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Create and run a multi-seed experiment");
  train_cmd->add_option("--algo", train.algo, "ppo, td3 or random")->required();
  train_cmd->add_option("--env", train.env, "Environment id (see list-envs)")->required();
  train_cmd->add_option("--n-timesteps", train.n_timesteps, "Training timesteps per seed")->required();
  train_cmd->add_option("--n-seeds", train.n_seeds, "Number of seeds")->required();
  train_cmd->add_option("--base-seed", train.base_seed, "Seed of run 0")->capture_default_str();
  train_cmd->add_option("--parallel", train.parallel, "Seeds trained concurrently")->capture_default_str();
  train_cmd->add_option("--hp", train.hp, "Hyperparameter override key=value (repeatable)");
  train_cmd->add_option("--workspace", train.workspace, "Workspace directory")
      ->default_str(default_workspace());

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate an experiment and update benchmark.csv");
  eval_cmd->add_option("--exp-id", evaluate.exp_id, "Experiment id")->required();
  eval_cmd->add_option("--n-eval-episodes", evaluate.n_eval_episodes, "Episodes per seed")
      ->capture_default_str();
  eval_cmd->add_flag("--log-episode", evaluate.log_episode, "Also log one episode and plot its panels");
  eval_cmd->add_flag("--allow-partial", evaluate.allow_partial, "Evaluate an incomplete experiment");
  eval_cmd->add_option("--workspace", evaluate.workspace, "Workspace directory")
      ->default_str(default_workspace());

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Bar chart of one metric across experiments");
  bench_cmd->add_option("--exp-ids", bench.exp_ids, "Comma-separated experiment ids")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("--metric", bench.metric, "Numeric benchmark.csv column")->capture_default_str();
  bench_cmd->add_option("--workspace", bench.workspace, "Workspace directory")
      ->default_str(default_workspace());

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "Random-search study with median pruning");
  tune_cmd->add_option("--algo", tune_args.algo, "ppo or td3")->required();
  tune_cmd->add_option("--env", tune_args.env, "Environment id")->required();
  tune_cmd->add_option("--n-trials", tune_args.n_trials, "Number of trials")->required();
  tune_cmd->add_option("--timesteps-per-trial", tune_args.timesteps_per_trial, "Training timesteps per trial")
      ->required();
  tune_cmd->add_option("--checkpoints", tune_args.checkpoints, "Evaluation checkpoints per trial")
      ->capture_default_str();
  tune_cmd->add_option("--seed", tune_args.seed, "Study seed")->capture_default_str();
  tune_cmd->add_option("--parallel", tune_args.parallel, "Concurrent trials (1 keeps the study deterministic)")
      ->capture_default_str();
  tune_cmd->add_option("--workspace", tune_args.workspace, "Workspace directory")
      ->default_str(default_workspace());

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Smoothed training curves for an experiment");
  plot_cmd->add_option("--exp-id", plot.exp_id, "Experiment id")->required();
  plot_cmd->add_option("--window", plot.window, "Smoothing window in episodes")->capture_default_str();
  plot_cmd->add_option("--workspace", plot.workspace, "Workspace directory")
      ->default_str(default_workspace());

  auto* list_cmd = app.add_subcommand("list-envs", "List registered environment ids");

  for (std::string* ws : {&train.workspace, &evaluate.workspace, &bench.workspace, &tune_args.workspace,
                          &plot.workspace}) {
    *ws = default_workspace();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitValidation;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (eval_cmd->parsed()) return cmd_evaluate(evaluate, out);
    if (bench_cmd->parsed()) return cmd_benchmark(bench, out);
    if (tune_cmd->parsed()) return cmd_tune(tune_args, out);
    if (plot_cmd->parsed()) return cmd_plot(plot, out);
    if (list_cmd->parsed()) return cmd_list_envs(out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LifecycleError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace rlreach::cli
