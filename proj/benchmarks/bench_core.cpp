#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "rlreach/agents.hpp"
#include "rlreach/arm.hpp"
#include "rlreach/reach_env.hpp"

using namespace rlreach;

static void BM_ForwardKinematics(benchmark::State& state) {
  const auto model = state.range(0) == 6 ? arm::ArmModel::widowx6() : arm::ArmModel::planar2();
  std::vector<double> q(model.dof(), 0.3);
  for (auto _ : state) {
    q[0] += 1e-9;
    benchmark::DoNotOptimize(arm::forward_kinematics(model, q));
  }
}
BENCHMARK(BM_ForwardKinematics)->Arg(6)->Arg(2);

static void BM_EnvStep(benchmark::State& state) {
  env::EnvInstance env(env::registry_lookup("reach-v1"), 0);
  env.reset(0);
  std::vector<double> action(env.config().action_dim(), 0.1);
  for (auto _ : state) {
    if (env.done()) env.reset();
    benchmark::DoNotOptimize(env.step(action));
  }
}
BENCHMARK(BM_EnvStep);

static void BM_MlpForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto net = nn::Mlp::glorot(nn::chain_shapes(9, {hidden, hidden}, 6), rng);
  const std::vector<double> x(9, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_forward(net, x));
}
BENCHMARK(BM_MlpForward)->Arg(64)->Arg(256);

static void BM_MlpBackward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto net = nn::Mlp::glorot(nn::chain_shapes(9, {hidden, hidden}, 6), rng);
  const std::vector<double> x(9, 0.2), gy(6, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_backward(net, x, gy));
}
BENCHMARK(BM_MlpBackward)->Arg(64)->Arg(256);

static void BM_PpoMinibatch(benchmark::State& state) {
  agents::PpoConfig cfg;
  std::mt19937_64 rng(2);
  const auto model = agents::make_actor_critic(9, 6, cfg, rng);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::normal_distribution<double> g(0.0, 1.0);
  agents::RolloutBatch batch;
  batch.obs = nn::RowMatrix::NullaryExpr(n, 9, [&] { return g(rng); });
  batch.actions = nn::RowMatrix::NullaryExpr(n, 6, [&] { return g(rng); });
  for (Eigen::Index i = 0; i < n; ++i) {
    batch.old_log_probs.push_back(-8.0 + g(rng));
    batch.advantages.push_back(g(rng));
    batch.returns.push_back(g(rng));
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(agents::ppo_minibatch_loss(model, batch, idx, cfg));
}
BENCHMARK(BM_PpoMinibatch)->Arg(64)->Arg(256);

static void BM_Td3Update(benchmark::State& state) {
  agents::Td3Config cfg;
  cfg.batch_size = state.range(0);
  cfg.learning_starts = 0;
  std::mt19937_64 rng(3);
  auto nets = agents::make_td3_nets(6, 2, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  agents::ReplayBuffer buf(4096, 6, 2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 4096; ++i) {
    std::vector<double> o(6), a(2), o2(6);
    for (auto& v : o) v = g(rng);
    for (auto& v : a) v = std::tanh(g(rng));
    for (auto& v : o2) v = g(rng);
    buf.push(o, a, g(rng), o2, false);
  }
  std::int64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(agents::td3_update(nets, opt, buf, cfg, rng, step++));
}
BENCHMARK(BM_Td3Update)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
