#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlreach/arm.hpp"

namespace rlreach::env {

using arm::Vec3;

enum class ActionMode { RelativeJoint, AbsoluteJoint };
enum class ObsMode { JointsGoal, JointsGoalEE, JointsGoalVector };
enum class RewardType { DenseSquared, DenseLinear, DeltaDistance, Sparse };

std::string to_string(ActionMode m);
std::string to_string(ObsMode m);
std::string to_string(RewardType r);

struct GoalBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const;
  Vec3 center() const { return 0.5 * (lo + hi); }
};

struct EnvConfig {
  std::string env_id;
  ActionMode action_mode = ActionMode::RelativeJoint;
  ObsMode obs_mode = ObsMode::JointsGoal;
  RewardType reward_type = RewardType::DenseSquared;
  int episode_len = 100;
  GoalBox goal_box;
  std::vector<double> success_thresholds_mm{5.0, 10.0, 20.0, 50.0};
  std::shared_ptr<const arm::ArmModel> arm;

  // Throws ValidationError when an invariant does not hold.
  void validate() const;

  std::size_t action_dim() const { return arm->dof(); }
  std::size_t obs_dim() const;

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json& doc);
};

// The eight base variants, "reach-v1" .. "reach-v8". Each also exists on the
// planar 2-DOF arm under the same ID with a "-planar" suffix.
const std::vector<std::string>& registered_ids();
bool is_registered(std::string_view env_id);
EnvConfig registry_lookup(std::string_view env_id);

// Joint command for apply_joint_command. Action components are clamped to [-1, 1].
std::vector<double> decode_action(const EnvConfig& config, const arm::ArmState& state,
                                  std::span<const double> action);

double compute_reward(const EnvConfig& config, double distance, double prev_distance);

std::vector<double> compose_observation(const EnvConfig& config, const arm::ArmState& state,
                                        const Vec3& goal);

struct StepInfo {
  double distance = 0.0;
  std::vector<bool> success_flags;  // one per success threshold
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

std::vector<bool> success_flags(const EnvConfig& config, double distance);

// A live, seeded episode. Single owner; not thread-safe.
class EnvInstance {
 public:
  explicit EnvInstance(EnvConfig config, std::uint64_t seed = 0);

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt);
  StepResult step(std::span<const double> action);

  // Test hook: moves the goal (bypassing goal-box sampling) and re-bases
  // prev_distance. Only valid right after reset.
  void place_goal(const Vec3& goal);

  const EnvConfig& config() const { return config_; }
  const arm::ArmState& arm_state() const { return state_; }
  const Vec3& goal() const { return goal_; }
  int step_count() const { return step_count_; }
  double distance() const;
  bool done() const { return step_count_ >= config_.episode_len; }
  std::vector<double> observation() const;

 private:
  Vec3 sample_goal();

  EnvConfig config_;
  std::mt19937_64 rng_;
  arm::ArmState state_;
  Vec3 goal_ = Vec3::Zero();
  int step_count_ = 0;
  double prev_distance_ = 0.0;
  bool started_ = false;
};

}  // namespace rlreach::env
