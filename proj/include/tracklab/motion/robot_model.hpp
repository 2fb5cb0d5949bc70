#pragma once

#include <array>
#include <string>

#include "tracklab/core/vec2.hpp"

namespace tracklab {

inline constexpr int kNumJoints = 10;
inline constexpr int kNumLinks = 12;
inline constexpr int kNumKeybodies = 9;

// Actuated joint order, fixed everywhere (clip files, observations, actions).
enum JointId {
  kShoulderL = 0,
  kElbowL,
  kShoulderR,
  kElbowR,
  kHipL,
  kKneeL,
  kAnkleL,
  kHipR,
  kKneeR,
  kAnkleR,
};

enum LinkId {
  kTorso = 0,
  kHead,
  kUpperArmL,
  kForearmL,
  kUpperArmR,
  kForearmR,
  kThighL,
  kShankL,
  kFootL,
  kThighR,
  kShankR,
  kFootR,
};

// Keybody order, fixed: head, hands, elbows, knees, ankles.
enum KeybodyId {
  kKbHead = 0,
  kKbHandL,
  kKbHandR,
  kKbElbowL,
  kKbElbowR,
  kKbKneeL,
  kKbKneeR,
  kKbAnkleL,
  kKbAnkleR,
};

template <typename T>
using JointArray = std::array<T, kNumJoints>;

// Planar humanoid: torso floating base (x, z, pitch), head welded to the
// torso top, two 2-joint arms and two 3-joint legs. Angles are CCW in the
// (x right, z up) plane; zero pose is torso upright, arms and legs straight
// down, feet horizontal pointing +x.
struct RobotModel {
  std::array<double, kNumLinks> link_lengths{};
  std::array<double, kNumLinks> link_masses{};
  std::array<double, kNumLinks> link_inertias{};  // about COM, kg m^2

  JointArray<double> joint_limit_min{};
  JointArray<double> joint_limit_max{};
  JointArray<double> torque_limits{};
  JointArray<double> kp{};
  JointArray<double> kd{};

  // Foot geometry: sole sits ankle_height below the ankle joint, contact
  // points at heel/toe offsets along the foot link.
  double ankle_height = 0.06;
  double heel_offset = 0.08;
  double toe_offset = 0.14;

  static const std::array<std::string, kNumJoints>& joint_names();
  static const std::array<std::string, kNumKeybodies>& keybody_names();

  // Standard humanoid used across the project (~46 kg, 1.65 m).
  static RobotModel standard();

  // Sum of masses of all links.
  double total_mass() const;

  // Root height with legs fully extended and feet on the ground.
  double rest_root_height() const;

  double clamp_joint(int j, double q) const;

  // Throws std::invalid_argument when any invariant is violated.
  void validate() const;
};

}  // namespace tracklab
