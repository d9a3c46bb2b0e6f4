#include "rlreach/arm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlreach/errors.hpp"

namespace rlreach::arm {

namespace {

struct DefaultJoint {
  Vec3 axis;
  Vec3 offset;
};

constexpr double kWidowxLimit = 2.6;
constexpr double kDefaultMaxStep = 0.05;

// Geometry is declared, not measured from hardware.
const std::vector<DefaultJoint>& widowx_table() {
  static const std::vector<DefaultJoint> table = {
      {Vec3::UnitZ(), Vec3(0.0, 0.0, 0.125)},   // base yaw
      {Vec3::UnitY(), Vec3(0.0, 0.0, 0.045)},   // shoulder pitch
      {Vec3::UnitY(), Vec3(0.05, 0.0, 0.14)},   // elbow pitch
      {Vec3::UnitY(), Vec3(0.14, 0.0, 0.0)},    // wrist pitch
      {Vec3::UnitX(), Vec3(0.06, 0.0, 0.0)},    // wrist roll
      {Vec3::UnitY(), Vec3(0.045, 0.0, 0.0)},   // gripper pitch
  };
  return table;
}

Vec3 rotate(const Vec3& axis, double angle, const Vec3& v) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

void check_length(const ArmModel& model, std::size_t n, const char* what) {
  if (n != model.dof()) {
    throw ContractViolation(std::string(what) + ": expected " + std::to_string(model.dof()) +
                            " joint values, got " + std::to_string(n));
  }
}

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

ArmModel::ArmModel(std::string name, std::vector<JointSpec> joints, Vec3 tool_offset)
    : name_(std::move(name)), joints_(std::move(joints)), tool_offset_(std::move(tool_offset)) {
  if (joints_.size() != 2 && joints_.size() != 6) {
    throw ValidationError("arm model must have 2 or 6 joints, got " +
                          std::to_string(joints_.size()));
  }
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const auto& j = joints_[i];
    const auto tag = "joint " + std::to_string(i) + ": ";
    if (std::abs(j.axis.norm() - 1.0) > 1e-12) throw ValidationError(tag + "axis is not unit length");
    if (!j.link_offset.allFinite()) throw ValidationError(tag + "link offset not finite");
    if (!(j.lower_limit < j.upper_limit)) throw ValidationError(tag + "lower_limit >= upper_limit");
    if (!(j.max_step > 0.0) || !std::isfinite(j.max_step)) {
      throw ValidationError(tag + "max_step must be positive");
    }
  }
  if (!tool_offset_.allFinite()) throw ValidationError("tool offset not finite");
}

ArmModel ArmModel::widowx6() {
  std::vector<JointSpec> joints;
  for (const auto& row : widowx_table()) {
    joints.push_back({row.axis, row.offset, -kWidowxLimit, kWidowxLimit, kDefaultMaxStep});
  }
  return ArmModel("widowx6", std::move(joints));
}

ArmModel ArmModel::planar2() {
  constexpr double pi = std::numbers::pi;
  std::vector<JointSpec> joints = {
      {Vec3::UnitZ(), Vec3::Zero(), -pi, pi, kDefaultMaxStep},
      {Vec3::UnitZ(), Vec3(0.20, 0.0, 0.0), -pi, pi, kDefaultMaxStep},
  };
  return ArmModel("planar2", std::move(joints), Vec3(0.15, 0.0, 0.0));
}

double ArmModel::reach_bound() const {
  double total = tool_offset_.norm();
  for (const auto& j : joints_) total += j.link_offset.norm();
  return total;
}

nlohmann::json ArmModel::to_json() const {
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& j : joints_) {
    joints.push_back({{"axis", vec3_to_json(j.axis)},
                      {"link_offset", vec3_to_json(j.link_offset)},
                      {"lower_limit", j.lower_limit},
                      {"upper_limit", j.upper_limit},
                      {"max_step", j.max_step}});
  }
  return {{"name", name_}, {"joints", joints}, {"tool_offset", vec3_to_json(tool_offset_)}};
}

ArmModel ArmModel::from_json(const nlohmann::json& doc) {
  try {
    std::vector<JointSpec> joints;
    for (const auto& j : doc.at("joints")) {
      joints.push_back({vec3_from_json(j.at("axis")), vec3_from_json(j.at("link_offset")),
                        j.at("lower_limit").get<double>(), j.at("upper_limit").get<double>(),
                        j.at("max_step").get<double>()});
    }
    Vec3 tool = doc.contains("tool_offset") ? vec3_from_json(doc["tool_offset"]) : Vec3::Zero();
    return ArmModel(doc.at("name").get<std::string>(), std::move(joints), tool);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("arm model JSON: ") + e.what());
  }
}

Vec3 forward_kinematics(const ArmModel& model, std::span<const double> angles) {
  check_length(model, angles.size(), "forward_kinematics");
  const auto& joints = model.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (!(angles[i] >= joints[i].lower_limit && angles[i] <= joints[i].upper_limit)) {
      throw DomainError("forward_kinematics: joint " + std::to_string(i) + " angle " +
                        std::to_string(angles[i]) + " outside limits");
    }
  }
  // Innermost frame first: p <- offset_i + R(axis_i, q_i) p.
  Vec3 p = model.tool_offset();
  for (std::size_t i = joints.size(); i-- > 0;) {
    p = joints[i].link_offset + rotate(joints[i].axis, angles[i], p);
  }
  return p;
}

std::vector<double> clamp_to_limits(const ArmModel& model, std::span<const double> angles) {
  check_length(model, angles.size(), "clamp_to_limits");
  std::vector<double> out(angles.begin(), angles.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(out[i], model.joint(i).lower_limit, model.joint(i).upper_limit);
  }
  return out;
}

ArmState make_state(const ArmModel& model, std::span<const double> angles) {
  ArmState state;
  state.angles.assign(angles.begin(), angles.end());
  state.ee_position = forward_kinematics(model, state.angles);
  return state;
}

ArmState home_state(const ArmModel& model) {
  std::vector<double> zeros(model.dof(), 0.0);
  return make_state(model, zeros);
}

ArmState apply_joint_command(const ArmModel& model, const ArmState& state,
                             std::span<const double> delta) {
  check_length(model, delta.size(), "apply_joint_command");
  check_length(model, state.angles.size(), "apply_joint_command (state)");
  std::vector<double> next(model.dof());
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!std::isfinite(delta[i])) {
      throw DomainError("apply_joint_command: non-finite delta for joint " + std::to_string(i));
    }
    const auto& j = model.joint(i);
    const double step = std::clamp(delta[i], -j.max_step, j.max_step);
    next[i] = std::clamp(state.angles[i] + step, j.lower_limit, j.upper_limit);
  }
  return make_state(model, next);
}

}  // namespace rlreach::arm
