#include "rlreach/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "rlreach/errors.hpp"
#include "rlreach/io.hpp"
#include "rlreach/reach_env.hpp"

namespace rlreach::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kKnownKeys[] = {"exp_id",  "algo",        "env_id",     "n_timesteps", "n_seeds",
                                      "base_seed", "hyperparams", "created_at", "status"};

bool is_known_key(const std::string& key) {
  return std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) != std::end(kKnownKeys);
}

std::optional<std::int64_t> parse_prefixed_id(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  const auto digits = name.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  try {
    return io::parse_int(digits);
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Created:
      return "Created";
    case Status::Running:
      return "Running";
    case Status::Complete:
      return "Complete";
    case Status::Failed:
      return "Failed";
  }
  return "?";
}

Status status_from_string(const std::string& s) {
  for (auto st : {Status::Created, Status::Running, Status::Complete, Status::Failed}) {
    if (to_string(st) == s) return st;
  }
  throw ValidationError("unknown experiment status '" + s + "'");
}

json ExperimentRecord::to_json() const {
  json doc = extras.is_object() ? extras : json::object();
  doc["exp_id"] = exp_id;
  doc["algo"] = algo;
  doc["env_id"] = env_id;
  doc["n_timesteps"] = n_timesteps;
  doc["n_seeds"] = n_seeds;
  doc["base_seed"] = base_seed;
  doc["hyperparams"] = hyperparams;
  doc["created_at"] = created_at;
  doc["status"] = to_string(status);
  return doc;
}

ExperimentRecord ExperimentRecord::from_json(const json& doc) {
  try {
    ExperimentRecord r;
    r.exp_id = doc.at("exp_id").get<std::int64_t>();
    r.algo = doc.at("algo").get<std::string>();
    r.env_id = doc.at("env_id").get<std::string>();
    r.n_timesteps = doc.at("n_timesteps").get<std::int64_t>();
    r.n_seeds = doc.at("n_seeds").get<std::int64_t>();
    r.base_seed = doc.at("base_seed").get<std::uint64_t>();
    r.hyperparams = doc.at("hyperparams");
    r.created_at = doc.at("created_at").get<std::string>();
    r.status = status_from_string(doc.at("status").get<std::string>());
    for (const auto& [key, value] : doc.items()) {
      if (!is_known_key(key)) r.extras[key] = value;
    }
    if (r.exp_id < 1 || r.n_seeds < 1) throw ValidationError("config.json: exp_id and n_seeds must be >= 1");
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config.json: ") + e.what());
  }
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

fs::path Workspace::exp_dir(std::int64_t exp_id) const {
  return root_ / ("exp_" + std::to_string(exp_id));
}

fs::path Workspace::config_path(std::int64_t exp_id) const { return exp_dir(exp_id) / "config.json"; }

fs::path Workspace::seed_dir(std::int64_t exp_id, std::int64_t k) const {
  return exp_dir(exp_id) / ("seed_" + std::to_string(k));
}

std::vector<std::int64_t> Workspace::experiment_ids() const {
  std::vector<std::int64_t> ids;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    if (auto id = parse_prefixed_id(entry.path().filename().string(), "exp_")) ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

ExperimentRecord create_experiment(const Workspace& ws, const std::string& algo,
                                   const std::string& env_id, std::int64_t n_timesteps,
                                   std::int64_t n_seeds, std::uint64_t base_seed,
                                   const json& hyperparams) {
  const auto parsed_algo = agents::algo_from_string(algo);
  if (!env::is_registered(env_id)) {
    std::string valid;
    for (const auto& id : env::registered_ids()) valid += (valid.empty() ? "" : ", ") + id;
    throw ValidationError("unknown env id '" + env_id + "'; valid ids: " + valid);
  }
  if (n_timesteps < 1) throw ValidationError("n_timesteps must be >= 1");
  if (n_seeds < 1) throw ValidationError("n_seeds must be >= 1");

  ExperimentRecord record;
  record.algo = agents::to_string(parsed_algo);
  record.env_id = env_id;
  record.n_timesteps = n_timesteps;
  record.n_seeds = n_seeds;
  record.base_seed = base_seed;
  record.hyperparams = agents::resolve_hyperparams(parsed_algo, hyperparams);
  record.created_at = io::utc_timestamp_now();
  record.status = Status::Created;

  std::error_code ec;
  fs::create_directories(ws.root(), ec);
  if (ec) throw IoError("cannot create workspace " + ws.root().string() + ": " + ec.message());

  // create_directory fails on an existing path, so concurrent creators never share an id.
  auto ids = ws.experiment_ids();
  std::int64_t next = ids.empty() ? 1 : ids.back() + 1;
  for (;; ++next) {
    if (fs::create_directory(ws.exp_dir(next), ec)) break;
    if (ec) throw IoError("cannot create " + ws.exp_dir(next).string() + ": " + ec.message());
  }
  record.exp_id = next;
  save_experiment(ws, record);
  return record;
}

ExperimentRecord load_experiment(const Workspace& ws, std::int64_t exp_id) {
  const auto path = ws.config_path(exp_id);
  if (!fs::exists(path)) {
    throw LookupError("experiment " + std::to_string(exp_id) + " not found under " +
                      ws.root().string());
  }
  return ExperimentRecord::from_json(io::read_json(path));
}

void save_experiment(const Workspace& ws, const ExperimentRecord& record) {
  io::write_json_atomic(ws.config_path(record.exp_id), record.to_json());
}

json RunMeta::to_json() const {
  return {{"k", k},
          {"seed", seed},
          {"wall_time_s", wall_time_s},
          {"status", status},
          {"message", message},
          {"timesteps_done", timesteps_done}};
}

RunMeta RunMeta::from_json(const json& doc) {
  try {
    RunMeta m;
    m.k = doc.at("k").get<std::int64_t>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.wall_time_s = doc.at("wall_time_s").get<double>();
    m.status = doc.at("status").get<std::string>();
    m.message = doc.value("message", "");
    m.timesteps_done = doc.value("timesteps_done", std::int64_t{0});
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run_meta.json: ") + e.what());
  }
}

std::optional<RunMeta> read_run_meta(const Workspace& ws, std::int64_t exp_id, std::int64_t k) {
  const auto path = ws.seed_dir(exp_id, k) / "run_meta.json";
  if (!fs::exists(path)) return std::nullopt;
  return RunMeta::from_json(io::read_json(path));
}

std::vector<std::int64_t> completed_seeds(const Workspace& ws, const ExperimentRecord& record) {
  std::vector<std::int64_t> out;
  for (std::int64_t k = 0; k < record.n_seeds; ++k) {
    auto meta = read_run_meta(ws, record.exp_id, k);
    if (meta && meta->status == "complete" &&
        fs::exists(ws.seed_dir(record.exp_id, k) / "policy.json")) {
      out.push_back(k);
    }
  }
  return out;
}

namespace {

RunMeta run_one_seed(const Workspace& ws, const ExperimentRecord& record, std::int64_t k,
                     const Trainer& trainer) {
  RunMeta meta;
  meta.k = k;
  meta.seed = record.seed_for(k);
  const auto dir = ws.seed_dir(record.exp_id, k);
  const auto start = std::chrono::steady_clock::now();
  try {
    fs::create_directories(dir);
    const auto result = trainer(agents::algo_from_string(record.algo), record.env_id, meta.seed,
                                record.hyperparams, record.n_timesteps);
    io::write_file_atomic(dir / "training_log.csv", result.log.to_csv());
    meta.timesteps_done = result.timesteps_done;
    if (result.failed) {
      meta.status = "failed";
      meta.message = result.failure_message;
      fs::remove(dir / "policy.json");
    } else {
      io::write_json_atomic(dir / "policy.json", result.policy.to_json());
      meta.status = "complete";
    }
  } catch (const std::exception& e) {
    meta.status = "failed";
    meta.message = e.what();
  }
  meta.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    fs::create_directories(dir);
    io::write_json_atomic(dir / "run_meta.json", meta.to_json());
  } catch (const std::exception&) {
    meta.status = "failed";
  }
  return meta;
}

}  // namespace

ExperimentRecord run_experiment(const Workspace& ws, std::int64_t exp_id,
                                const RunOptions& options) {
  if (options.parallelism < 1) throw ValidationError("parallelism must be >= 1");
  auto record = load_experiment(ws, exp_id);
  if (record.status != Status::Created && !options.overwrite) {
    throw LifecycleError("experiment " + std::to_string(exp_id) + " is " +
                         to_string(record.status) + "; pass the overwrite flag to rerun it");
  }
  record.status = Status::Running;
  save_experiment(ws, record);

  Trainer trainer = options.trainer;
  if (!trainer) {
    trainer = [](agents::Algo algo, const std::string& env_id, std::uint64_t seed,
                 const json& hp, std::int64_t n) { return agents::train(algo, env_id, seed, hp, n); };
  }

  std::vector<RunMeta> metas(static_cast<std::size_t>(record.n_seeds));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t k = next++; k < record.n_seeds; k = next++) {
      metas[static_cast<std::size_t>(k)] = run_one_seed(ws, record, k, trainer);
    }
  };
  const auto n_workers = std::min<std::int64_t>(options.parallelism, record.n_seeds);
  {
    std::vector<std::jthread> pool;
    for (std::int64_t i = 1; i < n_workers; ++i) pool.emplace_back(worker);
    worker();
  }

  const bool all_ok = std::all_of(metas.begin(), metas.end(),
                                  [](const RunMeta& m) { return m.status == "complete"; });
  record.status = all_ok ? Status::Complete : Status::Failed;
  save_experiment(ws, record);
  return record;
}

}  // namespace rlreach::experiment
