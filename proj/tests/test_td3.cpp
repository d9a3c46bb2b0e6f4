#include <gtest/gtest.h>

#include <random>

#include "rlreach/agents.hpp"
#include "rlreach/errors.hpp"

using namespace rlreach;
using agents::ReplayBuffer;
using agents::Td3Config;

namespace {

constexpr std::size_t kObs = 4, kAct = 2;

ReplayBuffer filled_buffer(std::size_t n, std::uint64_t seed) {
  ReplayBuffer buf(1000, kObs, kAct);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> o(kObs), a(kAct), o2(kObs);
    for (auto& v : o) v = g(rng);
    for (auto& v : a) v = u(rng);
    for (auto& v : o2) v = g(rng);
    buf.push(o, a, g(rng), o2, false);
  }
  return buf;
}

Td3Config small_config() {
  Td3Config c;
  c.batch_size = 32;
  c.learning_starts = 0;
  c.hidden = 16;
  return c;
}

bool same_params(const nn::Mlp& a, const nn::Mlp& b) {
  const auto pa = a.params(), pb = b.params();
  return std::equal(pa.begin(), pa.end(), pb.begin(), pb.end());
}

}  // namespace

TEST(ReplayBuffer, RingOverwritesOldestSlot) {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) {
    const std::vector<double> o{double(i)}, a{0.0}, o2{double(i + 1)};
    buf.push(o, a, double(i), o2, i % 2 == 0);
  }
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.cursor(), 2u);
  // Slots 0 and 1 hold transitions 3 and 4; slot 2 still holds transition 2.
  EXPECT_EQ(buf.at(0).reward, 3.0);
  EXPECT_EQ(buf.at(1).reward, 4.0);
  EXPECT_EQ(buf.at(2).reward, 2.0);
  EXPECT_EQ(buf.at(1).next_obs, std::vector<double>{5.0});
  EXPECT_TRUE(buf.at(1).done);
}

TEST(ReplayBuffer, SamplesOnlyFilledSlots) {
  ReplayBuffer buf(100, 1, 1);
  for (int i = 0; i < 7; ++i) {
    const std::vector<double> o{0.0}, a{0.0};
    buf.push(o, a, 0.0, o, false);
  }
  std::mt19937_64 rng(1);
  for (auto i : buf.sample_indices(500, rng)) EXPECT_LT(i, 7u);
}

TEST(ReplayBuffer, Errors) {
  ReplayBuffer buf(4, 2, 1);
  std::mt19937_64 rng(1);
  EXPECT_THROW(buf.sample_indices(1, rng), ContractViolation);
  const std::vector<double> o{0.0}, a{0.0};
  EXPECT_THROW(buf.push(o, a, 0.0, o, false), ContractViolation);
}

TEST(Td3Update, UnderfullBufferIsContractViolation) {
  auto buf = filled_buffer(10, 1);
  auto cfg = small_config();
  std::mt19937_64 rng(1);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  EXPECT_THROW(agents::td3_update(nets, opt, buf, cfg, rng, 100), ContractViolation);
}

TEST(Td3Update, BeforeLearningStartsIsContractViolation) {
  auto buf = filled_buffer(100, 1);
  auto cfg = small_config();
  cfg.learning_starts = 50;
  std::mt19937_64 rng(1);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  EXPECT_THROW(agents::td3_update(nets, opt, buf, cfg, rng, 10), ContractViolation);
  EXPECT_NO_THROW(agents::td3_update(nets, opt, buf, cfg, rng, 50));
}

TEST(Td3Update, TargetsStartAsCopiesOfOnlineNets) {
  auto cfg = small_config();
  std::mt19937_64 rng(2);
  const auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  EXPECT_TRUE(same_params(nets.actor, nets.actor_target));
  EXPECT_TRUE(same_params(nets.critic1, nets.critic1_target));
  EXPECT_TRUE(same_params(nets.critic2, nets.critic2_target));
  EXPECT_FALSE(same_params(nets.critic1, nets.critic2));
}

TEST(Td3Update, UnitTauCopiesOnlineIntoTargets) {
  auto buf = filled_buffer(200, 3);
  auto cfg = small_config();
  cfg.tau = 1.0;
  std::mt19937_64 rng(3);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  const auto rep = agents::td3_update(nets, opt, buf, cfg, rng, 0);
  ASSERT_TRUE(rep.actor_loss.has_value());  // first call is a policy turn
  EXPECT_TRUE(same_params(nets.actor, nets.actor_target));
  EXPECT_TRUE(same_params(nets.critic1, nets.critic1_target));
  EXPECT_TRUE(same_params(nets.critic2, nets.critic2_target));
}

TEST(Td3Update, PolicyDelaySchedule) {
  auto buf = filled_buffer(200, 4);
  auto cfg = small_config();
  cfg.policy_delay = 3;
  std::mt19937_64 rng(4);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  for (int k = 0; k < 9; ++k) {
    const auto before = std::vector<double>(nets.actor.params().begin(), nets.actor.params().end());
    const auto rep = agents::td3_update(nets, opt, buf, cfg, rng, k);
    EXPECT_EQ(rep.actor_loss.has_value(), k % 3 == 0) << k;
    const auto after = nets.actor.params();
    EXPECT_EQ(std::equal(before.begin(), before.end(), after.begin()), k % 3 != 0) << k;
  }
}

TEST(Td3Update, ZeroDiscountTargetsAreRewards) {
  ReplayBuffer buf(100, kObs, kAct);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> o(kObs, 0.1 * i), a(kAct, 0.0);
    buf.push(o, a, double(i), o, false);
  }
  auto cfg = small_config();
  cfg.gamma = 0.0;
  std::mt19937_64 rng(5);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  const auto rep = agents::td3_update(nets, opt, buf, cfg, rng, 0);
  for (double y : rep.targets) {
    EXPECT_EQ(y, std::floor(y));  // every reward is an integer index
    EXPECT_GE(y, 0.0);
    EXPECT_LT(y, 100.0);
  }
}

TEST(Td3Update, DoneTransitionsDoNotBootstrap) {
  ReplayBuffer buf(64, kObs, kAct);
  for (int i = 0; i < 64; ++i) {
    std::vector<double> o(kObs, 0.5), a(kAct, 0.2);
    buf.push(o, a, -1.5, o, true);
  }
  auto cfg = small_config();
  std::mt19937_64 rng(6);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  const auto rep = agents::td3_update(nets, opt, buf, cfg, rng, 0);
  for (double y : rep.targets) EXPECT_EQ(y, -1.5);
}

TEST(Td3Update, DeterministicGivenSeeds) {
  auto run = [] {
    auto buf = filled_buffer(300, 7);
    auto cfg = small_config();
    std::mt19937_64 rng(7);
    auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
    agents::Td3Optimizers opt(nets, cfg.lr);
    std::vector<double> losses;
    for (int k = 0; k < 10; ++k) losses.push_back(agents::td3_update(nets, opt, buf, cfg, rng, k).critic_loss);
    auto p = nets.actor_target.params();
    losses.insert(losses.end(), p.begin(), p.end());
    return losses;
  };
  EXPECT_EQ(run(), run());
}

TEST(Td3Update, CriticFitsFixedTargets) {
  // All transitions terminal: targets equal rewards, so the critic loss must fall.
  ReplayBuffer buf(256, kObs, kAct);
  std::mt19937_64 fill(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 256; ++i) {
    std::vector<double> o(kObs), a(kAct);
    for (auto& v : o) v = g(fill);
    for (auto& v : a) v = std::tanh(g(fill));
    buf.push(o, a, 0.5 * o[0] - a[1], o, true);
  }
  auto cfg = small_config();
  cfg.batch_size = 256;
  std::mt19937_64 rng(8);
  auto nets = agents::make_td3_nets(kObs, kAct, cfg, rng);
  agents::Td3Optimizers opt(nets, cfg.lr);
  const double first = agents::td3_update(nets, opt, buf, cfg, rng, 0).critic_loss;
  double last = first;
  for (int k = 1; k < 300; ++k) last = agents::td3_update(nets, opt, buf, cfg, rng, k).critic_loss;
  EXPECT_LT(last, 0.2 * first);
}

TEST(Polyak, InterpolatesParameters) {
  std::mt19937_64 rng(9);
  const auto shapes = nn::chain_shapes(3, {4}, 1);
  const auto a = nn::Mlp::glorot(shapes, rng);
  auto b = nn::Mlp::glorot(shapes, rng);
  for (auto& p : b.params()) p += 0.1;
  const std::vector<double> pa(a.params().begin(), a.params().end());
  const std::vector<double> pb(b.params().begin(), b.params().end());
  agents::polyak_update(a, b, 0.25);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(b.params()[i], 0.25 * pa[i] + 0.75 * pb[i], 1e-15);
}

TEST(Td3Config, ValidationRules) {
  using nlohmann::json;
  EXPECT_NO_THROW(Td3Config::from_json(json::object()));
  EXPECT_THROW(Td3Config::from_json(json{{"buffer_size", 10}, {"batch_size", 64}}), ValidationError);
  EXPECT_THROW(Td3Config::from_json(json{{"tau", 0.0}}), ValidationError);
  EXPECT_THROW(Td3Config::from_json(json{{"tau", 1.5}}), ValidationError);
  EXPECT_THROW(Td3Config::from_json(json{{"policy_delay", 0}}), ValidationError);
  EXPECT_THROW(Td3Config::from_json(json{{"policy_noise", -0.1}}), ValidationError);
  EXPECT_THROW(Td3Config::from_json(json{{"clip_range", 0.2}}), ValidationError);
  const Td3Config d;
  EXPECT_EQ(d.batch_size, 256);
  EXPECT_EQ(d.policy_delay, 2);
  EXPECT_EQ(d.tau, 0.005);
  EXPECT_EQ(d.policy_noise, 0.2);
  EXPECT_EQ(d.noise_clip, 0.5);
  EXPECT_EQ(d.explore_noise, 0.1);
}
