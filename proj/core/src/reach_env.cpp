#include "rlreach/reach_env.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rlreach/errors.hpp"

namespace rlreach::env {

namespace {

constexpr std::string_view kPlanarSuffix = "-planar";

struct Variant {
  const char* id;
  ActionMode action;
  ObsMode obs;
  RewardType reward;
};

constexpr std::array<Variant, 8> kVariants = {{
    {"reach-v1", ActionMode::RelativeJoint, ObsMode::JointsGoal, RewardType::DenseSquared},
    {"reach-v2", ActionMode::RelativeJoint, ObsMode::JointsGoal, RewardType::Sparse},
    {"reach-v3", ActionMode::RelativeJoint, ObsMode::JointsGoalVector, RewardType::DenseSquared},
    {"reach-v4", ActionMode::RelativeJoint, ObsMode::JointsGoalVector, RewardType::Sparse},
    {"reach-v5", ActionMode::AbsoluteJoint, ObsMode::JointsGoal, RewardType::DenseSquared},
    {"reach-v6", ActionMode::AbsoluteJoint, ObsMode::JointsGoal, RewardType::Sparse},
    {"reach-v7", ActionMode::AbsoluteJoint, ObsMode::JointsGoalVector, RewardType::DenseSquared},
    {"reach-v8", ActionMode::AbsoluteJoint, ObsMode::JointsGoalVector, RewardType::Sparse},
}};

const GoalBox kWidowxGoalBox{Vec3(0.10, -0.15, 0.05), Vec3(0.25, 0.15, 0.25)};
const GoalBox kPlanarGoalBox{Vec3(0.10, -0.15, 0.0), Vec3(0.25, 0.15, 0.0)};

template <typename Enum, std::size_t N>
Enum enum_from_string(const std::array<std::pair<Enum, const char*>, N>& table,
                      const std::string& text) {
  for (const auto& [value, name] : table) {
    if (text == name) return value;
  }
  throw ValidationError("unknown enum value '" + text + "'");
}

constexpr std::array<std::pair<ActionMode, const char*>, 2> kActionNames = {{
    {ActionMode::RelativeJoint, "RelativeJoint"},
    {ActionMode::AbsoluteJoint, "AbsoluteJoint"},
}};
constexpr std::array<std::pair<ObsMode, const char*>, 3> kObsNames = {{
    {ObsMode::JointsGoal, "JointsGoal"},
    {ObsMode::JointsGoalEE, "JointsGoalEE"},
    {ObsMode::JointsGoalVector, "JointsGoalVector"},
}};
constexpr std::array<std::pair<RewardType, const char*>, 4> kRewardNames = {{
    {RewardType::DenseSquared, "DenseSquared"},
    {RewardType::DenseLinear, "DenseLinear"},
    {RewardType::DeltaDistance, "DeltaDistance"},
    {RewardType::Sparse, "Sparse"},
}};

template <typename Enum, std::size_t N>
std::string enum_name(const std::array<std::pair<Enum, const char*>, N>& table, Enum v) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string valid_ids_message() {
  std::string msg;
  for (const auto& v : kVariants) {
    if (!msg.empty()) msg += ", ";
    msg += v.id;
  }
  return msg;
}

}  // namespace

std::string to_string(ActionMode m) { return enum_name(kActionNames, m); }
std::string to_string(ObsMode m) { return enum_name(kObsNames, m); }
std::string to_string(RewardType r) { return enum_name(kRewardNames, r); }

bool GoalBox::contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

void EnvConfig::validate() const {
  if (!arm) throw ValidationError("env config has no arm model");
  if (episode_len < 1) throw ValidationError("episode_len must be >= 1");
  if (success_thresholds_mm.empty()) throw ValidationError("success thresholds must be non-empty");
  for (std::size_t i = 0; i < success_thresholds_mm.size(); ++i) {
    if (!(success_thresholds_mm[i] > 0.0)) throw ValidationError("success thresholds must be > 0");
    if (i > 0 && !(success_thresholds_mm[i] > success_thresholds_mm[i - 1])) {
      throw ValidationError("success thresholds must be strictly increasing");
    }
  }
  if (!(goal_box.lo.array() <= goal_box.hi.array()).all()) {
    throw ValidationError("goal box lo must be <= hi on every axis");
  }
  const double reach = arm->reach_bound();
  for (int corner = 0; corner < 8; ++corner) {
    Vec3 c((corner & 1) ? goal_box.hi.x() : goal_box.lo.x(),
           (corner & 2) ? goal_box.hi.y() : goal_box.lo.y(),
           (corner & 4) ? goal_box.hi.z() : goal_box.lo.z());
    if (c.norm() > reach) throw ValidationError("goal box exceeds the arm's reachable ball");
  }
}

std::size_t EnvConfig::obs_dim() const {
  const std::size_t n = arm->dof();
  switch (obs_mode) {
    case ObsMode::JointsGoal:
    case ObsMode::JointsGoalVector:
      return n + 3;
    case ObsMode::JointsGoalEE:
      return n + 6;
  }
  return n + 3;
}

nlohmann::json EnvConfig::to_json() const {
  return {{"env_id", env_id},
          {"action_mode", to_string(action_mode)},
          {"obs_mode", to_string(obs_mode)},
          {"reward_type", to_string(reward_type)},
          {"episode_len", episode_len},
          {"goal_box", {{"lo", vec3_json(goal_box.lo)}, {"hi", vec3_json(goal_box.hi)}}},
          {"success_thresholds_mm", success_thresholds_mm},
          {"arm", arm->to_json()}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json& doc) {
  try {
    EnvConfig cfg;
    cfg.env_id = doc.at("env_id").get<std::string>();
    cfg.action_mode = enum_from_string(kActionNames, doc.at("action_mode").get<std::string>());
    cfg.obs_mode = enum_from_string(kObsNames, doc.at("obs_mode").get<std::string>());
    cfg.reward_type = enum_from_string(kRewardNames, doc.at("reward_type").get<std::string>());
    cfg.episode_len = doc.at("episode_len").get<int>();
    cfg.goal_box = {vec3_from(doc.at("goal_box").at("lo")), vec3_from(doc.at("goal_box").at("hi"))};
    cfg.success_thresholds_mm = doc.at("success_thresholds_mm").get<std::vector<double>>();
    cfg.arm = std::make_shared<const arm::ArmModel>(arm::ArmModel::from_json(doc.at("arm")));
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("env config JSON: ") + e.what());
  }
}

const std::vector<std::string>& registered_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& v : kVariants) out.emplace_back(v.id);
    return out;
  }();
  return ids;
}

bool is_registered(std::string_view env_id) {
  if (env_id.ends_with(kPlanarSuffix)) env_id.remove_suffix(kPlanarSuffix.size());
  return std::any_of(kVariants.begin(), kVariants.end(),
                     [&](const Variant& v) { return env_id == v.id; });
}

EnvConfig registry_lookup(std::string_view env_id) {
  static const auto widowx = std::make_shared<const arm::ArmModel>(arm::ArmModel::widowx6());
  static const auto planar = std::make_shared<const arm::ArmModel>(arm::ArmModel::planar2());

  std::string_view base = env_id;
  const bool is_planar = base.ends_with(kPlanarSuffix);
  if (is_planar) base.remove_suffix(kPlanarSuffix.size());

  for (const auto& v : kVariants) {
    if (base != v.id) continue;
    EnvConfig cfg;
    cfg.env_id = std::string(env_id);
    cfg.action_mode = v.action;
    cfg.obs_mode = v.obs;
    cfg.reward_type = v.reward;
    cfg.arm = is_planar ? planar : widowx;
    cfg.goal_box = is_planar ? kPlanarGoalBox : kWidowxGoalBox;
    return cfg;
  }
  throw LookupError("unknown env id '" + std::string(env_id) + "'; valid ids: " +
                    valid_ids_message() + " (append \"-planar\" for the 2-DOF arm)");
}

std::vector<double> decode_action(const EnvConfig& config, const arm::ArmState& state,
                                  std::span<const double> action) {
  const auto& model = *config.arm;
  if (action.size() != model.dof()) {
    throw ContractViolation("decode_action: expected " + std::to_string(model.dof()) +
                            " action components, got " + std::to_string(action.size()));
  }
  std::vector<double> command(model.dof());
  for (std::size_t i = 0; i < command.size(); ++i) {
    if (std::isnan(action[i])) throw DomainError("decode_action: NaN action component");
    const double a = std::clamp(action[i], -1.0, 1.0);
    const auto& j = model.joint(i);
    if (config.action_mode == ActionMode::RelativeJoint) {
      command[i] = a * j.max_step;
    } else {
      command[i] = (j.midpoint() + a * j.half_range()) - state.angles[i];
    }
  }
  return command;
}

double compute_reward(const EnvConfig& config, double distance, double prev_distance) {
  if (!(distance >= 0.0) || !(prev_distance >= 0.0)) {
    throw DomainError("compute_reward: distances must be non-negative");
  }
  switch (config.reward_type) {
    case RewardType::DenseSquared:
      return -distance * distance;
    case RewardType::DenseLinear:
      return -distance;
    case RewardType::DeltaDistance:
      return prev_distance - distance;
    case RewardType::Sparse:
      return distance < config.success_thresholds_mm.front() / 1000.0 ? 0.0 : -1.0;
  }
  return 0.0;
}

std::vector<double> compose_observation(const EnvConfig& config, const arm::ArmState& state,
                                        const Vec3& goal) {
  const auto& model = *config.arm;
  std::vector<double> obs;
  obs.reserve(config.obs_dim());
  for (std::size_t i = 0; i < model.dof(); ++i) {
    const auto& j = model.joint(i);
    obs.push_back((state.angles[i] - j.midpoint()) / j.half_range());
  }
  auto push3 = [&](const Vec3& v) { obs.insert(obs.end(), {v.x(), v.y(), v.z()}); };
  switch (config.obs_mode) {
    case ObsMode::JointsGoal:
      push3(goal);
      break;
    case ObsMode::JointsGoalEE:
      push3(goal);
      push3(state.ee_position);
      break;
    case ObsMode::JointsGoalVector:
      push3(goal - state.ee_position);
      break;
  }
  return obs;
}

std::vector<bool> success_flags(const EnvConfig& config, double distance) {
  std::vector<bool> flags;
  flags.reserve(config.success_thresholds_mm.size());
  for (double t : config.success_thresholds_mm) flags.push_back(distance < t / 1000.0);
  return flags;
}

EnvInstance::EnvInstance(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  state_ = arm::home_state(*config_.arm);
}

Vec3 EnvInstance::sample_goal() {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    const double lo = config_.goal_box.lo[k];
    const double hi = config_.goal_box.hi[k];
    if (lo == hi) {
      g[k] = lo;
    } else {
      std::uniform_real_distribution<double> dist(lo, hi);
      g[k] = dist(rng_);
    }
  }
  return g;
}

std::vector<double> EnvInstance::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_.seed(*seed);
  state_ = arm::home_state(*config_.arm);
  goal_ = sample_goal();
  step_count_ = 0;
  prev_distance_ = distance();
  started_ = true;
  return observation();
}

void EnvInstance::place_goal(const Vec3& goal) {
  if (step_count_ != 0) throw LifecycleError("place_goal is only valid right after reset");
  if (!goal.allFinite()) throw DomainError("place_goal: non-finite goal");
  goal_ = goal;
  prev_distance_ = distance();
}

double EnvInstance::distance() const { return (state_.ee_position - goal_).norm(); }

std::vector<double> EnvInstance::observation() const {
  return compose_observation(config_, state_, goal_);
}

StepResult EnvInstance::step(std::span<const double> action) {
  if (!started_) throw LifecycleError("step called before reset");
  if (done()) throw LifecycleError("step called on a finished episode; call reset first");

  const auto command = decode_action(config_, state_, action);
  state_ = arm::apply_joint_command(*config_.arm, state_, command);
  ++step_count_;

  StepResult result;
  result.info.distance = distance();
  result.reward = compute_reward(config_, result.info.distance, prev_distance_);
  prev_distance_ = result.info.distance;
  result.done = step_count_ == config_.episode_len;
  result.info.success_flags = success_flags(config_, result.info.distance);
  result.observation = observation();
  return result;
}

}  // namespace rlreach::env
