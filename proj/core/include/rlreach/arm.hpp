#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

namespace rlreach::arm {

using Vec3 = Eigen::Vector3d;

struct JointSpec {
  Vec3 axis = Vec3::UnitZ();         // unit rotation axis in the joint frame
  Vec3 link_offset = Vec3::Zero();   // metres, from the previous joint frame
  double lower_limit = 0.0;          // radians
  double upper_limit = 0.0;
  double max_step = 0.05;            // largest per-step angle change, radians

  double midpoint() const { return 0.5 * (lower_limit + upper_limit); }
  double half_range() const { return 0.5 * (upper_limit - lower_limit); }
};

// Immutable serial revolute chain. The tool point sits at `tool_offset` in the
// frame of the last joint.
class ArmModel {
 public:
  ArmModel(std::string name, std::vector<JointSpec> joints, Vec3 tool_offset = Vec3::Zero());

  // Yaw-pitch-pitch-pitch-roll-pitch chain standing in for a WidowX-class arm.
  static ArmModel widowx6();
  // Two links (0.20 m, 0.15 m) rotating about z in the xy-plane.
  static ArmModel planar2();

  const std::string& name() const { return name_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(std::size_t i) const { return joints_.at(i); }
  std::size_t dof() const { return joints_.size(); }
  const Vec3& tool_offset() const { return tool_offset_; }

  // Upper bound on |ee| over every configuration.
  double reach_bound() const;

  nlohmann::json to_json() const;
  static ArmModel from_json(const nlohmann::json& doc);

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  Vec3 tool_offset_;
};

struct ArmState {
  std::vector<double> angles;
  Vec3 ee_position = Vec3::Zero();
};

Vec3 forward_kinematics(const ArmModel& model, std::span<const double> angles);

std::vector<double> clamp_to_limits(const ArmModel& model, std::span<const double> angles);

// State at the given in-limit configuration with its ee position cached.
ArmState make_state(const ArmModel& model, std::span<const double> angles);
ArmState home_state(const ArmModel& model);

// Per-joint: clamp delta to +-max_step, add, clamp to limits, recompute FK.
ArmState apply_joint_command(const ArmModel& model, const ArmState& state,
                             std::span<const double> delta);

}  // namespace rlreach::arm
