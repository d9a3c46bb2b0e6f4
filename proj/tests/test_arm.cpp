#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rlreach/arm.hpp"
#include "rlreach/errors.hpp"

using namespace rlreach;
using arm::ArmModel;
using arm::Vec3;

namespace {

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], tol) << "component " << k;
}

}  // namespace

TEST(ForwardKinematics, PlanarExtendedAlongX) {
  const auto m = ArmModel::planar2();
  const std::vector<double> q{0.0, 0.0};
  expect_vec_near(arm::forward_kinematics(m, q), Vec3(0.35, 0, 0), 1e-15);
}

TEST(ForwardKinematics, PlanarRotatedQuarterTurn) {
  const auto m = ArmModel::planar2();
  const std::vector<double> q{std::numbers::pi / 2, 0.0};
  expect_vec_near(arm::forward_kinematics(m, q), Vec3(0, 0.35, 0), 1e-15);
}

TEST(ForwardKinematics, WidowHomeIsSumOfOffsets) {
  const auto m = ArmModel::widowx6();
  Vec3 sum = Vec3::Zero();
  for (const auto& j : m.joints()) sum += j.link_offset;
  const std::vector<double> zeros(6, 0.0);
  expect_vec_near(arm::forward_kinematics(m, zeros), sum, 1e-9);
  expect_vec_near(oracle::fk_homogeneous(m, zeros), sum, 1e-12);
}

TEST(ForwardKinematics, MatchesHomogeneousOracleOnBothArms) {
  std::mt19937_64 rng(11);
  for (const auto& m : {ArmModel::widowx6(), ArmModel::planar2()}) {
    for (int i = 0; i < 1000; ++i) {
      const auto q = oracle::random_angles(m, rng);
      expect_vec_near(arm::forward_kinematics(m, q), oracle::fk_homogeneous(m, q), 1e-9);
    }
  }
}

TEST(ForwardKinematics, Errors) {
  const auto m = ArmModel::planar2();
  EXPECT_THROW(arm::forward_kinematics(m, std::vector<double>{0.0}), ContractViolation);
  EXPECT_THROW(arm::forward_kinematics(m, std::vector<double>{4.0, 0.0}), DomainError);
  EXPECT_THROW(arm::forward_kinematics(m, std::vector<double>{NAN, 0.0}), DomainError);
}

TEST(ForwardKinematics, ReachBoundHolds) {
  std::mt19937_64 rng(5);
  for (const auto& m : {ArmModel::widowx6(), ArmModel::planar2()}) {
    double bound = m.tool_offset().norm();
    for (const auto& j : m.joints()) bound += j.link_offset.norm();
    EXPECT_NEAR(m.reach_bound(), bound, 1e-15);
    for (int i = 0; i < 2000; ++i) {
      EXPECT_LE(arm::forward_kinematics(m, oracle::random_angles(m, rng)).norm(), bound + 1e-12);
    }
  }
}

TEST(ClampToLimits, Examples) {
  const auto m = ArmModel::planar2();
  const std::vector<double> inside{0.3, -1.0};
  EXPECT_EQ(arm::clamp_to_limits(m, inside), inside);
  const auto up = arm::clamp_to_limits(m, std::vector<double>{m.joint(0).upper_limit + 0.3, 0.0});
  EXPECT_EQ(up[0], m.joint(0).upper_limit);
  const auto low = arm::clamp_to_limits(m, std::vector<double>{-10.0, -10.0});
  EXPECT_EQ(low, (std::vector<double>{-std::numbers::pi, -std::numbers::pi}));
}

TEST(ApplyJointCommand, ZeroDeltaIsIdentity) {
  const auto m = ArmModel::widowx6();
  std::mt19937_64 rng(1);
  const auto s = arm::make_state(m, oracle::random_angles(m, rng));
  const auto next = arm::apply_joint_command(m, s, std::vector<double>(6, 0.0));
  EXPECT_EQ(next.angles, s.angles);
  EXPECT_EQ(next.ee_position, s.ee_position);
}

TEST(ApplyJointCommand, LargeDeltaAdvancesExactlyMaxStep) {
  const auto m = ArmModel::widowx6();
  const auto s = arm::home_state(m);
  const auto next = arm::apply_joint_command(m, s, std::vector<double>(6, 1.0));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(next.angles[i], m.joint(i).max_step);
  const auto back = arm::apply_joint_command(m, s, std::vector<double>(6, -7.0));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(back.angles[i], -m.joint(i).max_step);
}

TEST(ApplyJointCommand, PropertiesOverRandomStates) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> big(0.0, 0.2);
  for (const auto& m : {ArmModel::widowx6(), ArmModel::planar2()}) {
    for (int i = 0; i < 2000; ++i) {
      // Start near the limits often so that clamping is exercised.
      auto q = oracle::random_angles(m, rng);
      if (i % 3 == 0) {
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = m.joint(j).upper_limit - 0.01;
      }
      const auto s = arm::make_state(m, q);
      std::vector<double> d(m.dof());
      for (auto& v : d) v = big(rng);
      const auto before = s;
      const auto n1 = arm::apply_joint_command(m, s, d);
      const auto n2 = arm::apply_joint_command(m, s, d);
      EXPECT_EQ(s.angles, before.angles);  // input untouched
      EXPECT_EQ(n1.angles, n2.angles);      // bitwise deterministic
      EXPECT_EQ(n1.ee_position, n2.ee_position);
      for (std::size_t j = 0; j < m.dof(); ++j) {
        EXPECT_GE(n1.angles[j], m.joint(j).lower_limit);
        EXPECT_LE(n1.angles[j], m.joint(j).upper_limit);
        EXPECT_LE(std::abs(n1.angles[j] - s.angles[j]), m.joint(j).max_step + 1e-15);
      }
      const auto fk = oracle::fk_homogeneous(m, n1.angles);
      EXPECT_NEAR((n1.ee_position - fk).norm(), 0.0, 1e-9);
    }
  }
}

TEST(ApplyJointCommand, RejectsNonFiniteAndWrongLength) {
  const auto m = ArmModel::planar2();
  const auto s = arm::home_state(m);
  EXPECT_THROW(arm::apply_joint_command(m, s, std::vector<double>{NAN, 0.0}), DomainError);
  EXPECT_THROW(arm::apply_joint_command(m, s, std::vector<double>{INFINITY, 0.0}), DomainError);
  EXPECT_THROW(arm::apply_joint_command(m, s, std::vector<double>{0.0}), ContractViolation);
}

TEST(ArmModel, ValidatesInvariants) {
  arm::JointSpec good;
  good.lower_limit = -1;
  good.upper_limit = 1;
  EXPECT_THROW(ArmModel("one", {good}), ValidationError);
  auto bad_axis = good;
  bad_axis.axis = Vec3(1, 1, 0);
  EXPECT_THROW(ArmModel("x", {good, bad_axis}), ValidationError);
  auto bad_limits = good;
  bad_limits.lower_limit = 2;
  EXPECT_THROW(ArmModel("x", {good, bad_limits}), ValidationError);
  auto bad_step = good;
  bad_step.max_step = 0;
  EXPECT_THROW(ArmModel("x", {good, bad_step}), ValidationError);
  EXPECT_NO_THROW(ArmModel("x", {good, good}));
}

TEST(ArmModel, JsonRoundTrip) {
  for (const auto& m : {ArmModel::widowx6(), ArmModel::planar2()}) {
    const auto doc = m.to_json();
    EXPECT_TRUE(doc.contains("name"));
    EXPECT_TRUE(doc.contains("joints"));
    const auto back = ArmModel::from_json(doc);
    EXPECT_EQ(back.to_json().dump(), doc.dump());
    EXPECT_EQ(back.dof(), m.dof());
  }
}
