#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/experiment.hpp"
#include "rlreach/io.hpp"

using namespace rlreach;
using namespace rlreach::experiment;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fast deterministic trainer: a log whose values depend only on the seed.
agents::TrainResult stub_train(agents::Algo, const std::string&, std::uint64_t seed, const json&,
                               std::int64_t n) {
  agents::TrainResult r;
  r.policy = nn::zero_policy(6, 6);
  for (std::int64_t e = 0; e < n / 100; ++e) {
    r.log.rows.push_back({100 * (e + 1), e, -1.0 / double(seed + 1 + e), 0.01 * double(seed)});
  }
  r.timesteps_done = n;
  return r;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

}  // namespace

TEST(Workspace, IdsStartAtOneAndFollowMax) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path() / "w");
  EXPECT_TRUE(ws.experiment_ids().empty());
  EXPECT_EQ(create_experiment(ws, "random", "reach-v1", 100, 1, 0, json::object()).exp_id, 1);
  fs::create_directories(ws.exp_dir(5));
  fs::create_directories(ws.root() / "exp_abc");
  fs::create_directories(ws.root() / "not_an_exp_3");
  EXPECT_EQ(ws.experiment_ids(), (std::vector<std::int64_t>{1, 5}));
  EXPECT_EQ(create_experiment(ws, "random", "reach-v1", 100, 1, 0, json::object()).exp_id, 6);
}

TEST(Workspace, DeletedMaxIdIsReused) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  for (int i = 0; i < 3; ++i) create_experiment(ws, "random", "reach-v1", 100, 1, 0, json::object());
  fs::remove_all(ws.exp_dir(3));
  EXPECT_EQ(create_experiment(ws, "random", "reach-v1", 100, 1, 0, json::object()).exp_id, 3);
}

TEST(Workspace, InvalidRequestsCreateNothing) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path() / "w");
  EXPECT_THROW(create_experiment(ws, "sac", "reach-v1", 100, 1, 0, json::object()), ValidationError);
  EXPECT_THROW(create_experiment(ws, "ppo", "reach-v9", 100, 1, 0, json::object()), ValidationError);
  EXPECT_THROW(create_experiment(ws, "ppo", "reach-v1", 0, 1, 0, json::object()), ValidationError);
  EXPECT_THROW(create_experiment(ws, "ppo", "reach-v1", 100, 0, 0, json::object()), ValidationError);
  EXPECT_THROW(create_experiment(ws, "ppo", "reach-v1", 100, 1, 0, json{{"bogus", 1}}), ValidationError);
  EXPECT_FALSE(fs::exists(ws.root()));
}

TEST(Workspace, UnknownEnvMessageListsValidIds) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  try {
    create_experiment(ws, "ppo", "reach-v9", 100, 1, 0, json::object());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("reach-v8"), std::string::npos);
  }
}

TEST(ExperimentRecord, ConfigRoundTripKeepsUnknownKeys) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  auto rec = create_experiment(ws, "ppo", "reach-v2", 5000, 3, 7, json{{"lr", 0.001}});
  EXPECT_EQ(rec.hyperparams["lr"], 0.001);
  EXPECT_EQ(rec.hyperparams["rollout_len"], 2048);  // resolved defaults are stored
  EXPECT_EQ(rec.status, Status::Created);

  auto doc = io::read_json(ws.config_path(rec.exp_id));
  doc["note"] = "kept";
  doc["tags"] = json::array({"a", "b"});
  io::write_json_atomic(ws.config_path(rec.exp_id), doc);
  const auto bytes = slurp(ws.config_path(rec.exp_id));

  const auto loaded = load_experiment(ws, rec.exp_id);
  EXPECT_EQ(loaded.extras["note"], "kept");
  save_experiment(ws, loaded);
  EXPECT_EQ(slurp(ws.config_path(rec.exp_id)), bytes);
  EXPECT_EQ(load_experiment(ws, rec.exp_id), loaded);
}

TEST(ExperimentRecord, LoadErrors) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  EXPECT_THROW(load_experiment(ws, 4), LookupError);
  fs::create_directories(ws.exp_dir(4));
  io::write_file_atomic(ws.config_path(4), "{\"exp_id\": 4,");
  EXPECT_THROW(load_experiment(ws, 4), ParseError);
  io::write_file_atomic(ws.config_path(4), "{\"exp_id\": 4}");
  EXPECT_THROW(load_experiment(ws, 4), ValidationError);
}

TEST(Status, Names) {
  for (auto s : {Status::Created, Status::Running, Status::Complete, Status::Failed}) {
    EXPECT_EQ(status_from_string(to_string(s)), s);
  }
  EXPECT_THROW(status_from_string("done"), ValidationError);
}

TEST(RunExperiment, WritesSeedArtifacts) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto rec = create_experiment(ws, "random", "reach-v1", 300, 2, 10, json::object());
  RunOptions opt;
  opt.trainer = stub_train;
  const auto done = run_experiment(ws, rec.exp_id, opt);
  EXPECT_EQ(done.status, Status::Complete);
  EXPECT_EQ(load_experiment(ws, rec.exp_id).status, Status::Complete);
  for (int k = 0; k < 2; ++k) {
    const auto dir = ws.seed_dir(rec.exp_id, k);
    EXPECT_TRUE(fs::exists(dir / "training_log.csv"));
    EXPECT_TRUE(fs::exists(dir / "policy.json"));
    const auto meta = read_run_meta(ws, rec.exp_id, k);
    ASSERT_TRUE(meta.has_value());
    EXPECT_EQ(meta->seed, 10u + k);
    EXPECT_EQ(meta->status, "complete");
  }
  EXPECT_EQ(completed_seeds(ws, done), (std::vector<std::int64_t>{0, 1}));
}

TEST(RunExperiment, OneFailedSeedFailsExperiment) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto rec = create_experiment(ws, "random", "reach-v1", 300, 3, 0, json::object());
  RunOptions opt;
  opt.trainer = [](agents::Algo a, const std::string& e, std::uint64_t seed, const json& hp, std::int64_t n) {
    auto r = stub_train(a, e, seed, hp, n);
    if (seed == 1) {
      r.failed = true;
      r.failure_message = "diverged";
    }
    return r;
  };
  const auto done = run_experiment(ws, rec.exp_id, opt);
  EXPECT_EQ(done.status, Status::Failed);
  EXPECT_EQ(completed_seeds(ws, done), (std::vector<std::int64_t>{0, 2}));
  EXPECT_FALSE(fs::exists(ws.seed_dir(rec.exp_id, 1) / "policy.json"));
  EXPECT_TRUE(fs::exists(ws.seed_dir(rec.exp_id, 1) / "training_log.csv"));
  EXPECT_EQ(read_run_meta(ws, rec.exp_id, 1)->message, "diverged");
}

TEST(RunExperiment, ThrowingTrainerIsRecordedAsFailure) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto rec = create_experiment(ws, "random", "reach-v1", 300, 1, 0, json::object());
  RunOptions opt;
  opt.trainer = [](agents::Algo, const std::string&, std::uint64_t, const json&, std::int64_t) -> agents::TrainResult {
    throw std::runtime_error("boom");
  };
  EXPECT_EQ(run_experiment(ws, rec.exp_id, opt).status, Status::Failed);
  EXPECT_EQ(read_run_meta(ws, rec.exp_id, 0)->message, "boom");
}

TEST(RunExperiment, ParallelismDoesNotChangeBytes) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto a = create_experiment(ws, "random", "reach-v3", 500, 3, 4, json::object());
  const auto b = create_experiment(ws, "random", "reach-v3", 500, 3, 4, json::object());
  RunOptions serial, parallel;
  parallel.parallelism = 3;
  run_experiment(ws, a.exp_id, serial);
  run_experiment(ws, b.exp_id, parallel);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(slurp(ws.seed_dir(a.exp_id, k) / "training_log.csv"),
              slurp(ws.seed_dir(b.exp_id, k) / "training_log.csv"));
    EXPECT_EQ(slurp(ws.seed_dir(a.exp_id, k) / "policy.json"), slurp(ws.seed_dir(b.exp_id, k) / "policy.json"));
  }
}

TEST(RunExperiment, RerunNeedsOverwrite) {
  oracle::TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto rec = create_experiment(ws, "random", "reach-v1", 200, 1, 0, json::object());
  RunOptions opt;
  opt.trainer = stub_train;
  run_experiment(ws, rec.exp_id, opt);
  EXPECT_THROW(run_experiment(ws, rec.exp_id, opt), LifecycleError);
  opt.overwrite = true;
  EXPECT_EQ(run_experiment(ws, rec.exp_id, opt).status, Status::Complete);
  RunOptions bad;
  bad.parallelism = 0;
  EXPECT_THROW(run_experiment(ws, rec.exp_id, bad), ValidationError);
  EXPECT_THROW(run_experiment(ws, 99, opt), LookupError);
}
