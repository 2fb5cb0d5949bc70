#pragma once

#include <array>

#include "tracklab/core/vec2.hpp"
#include "tracklab/motion/robot_model.hpp"

namespace tracklab {

struct SimState {
  Vec2 root_pos;
  Rot2 root_rot;
  Vec2 root_vel;
  double root_angvel = 0.0;
  JointArray<double> q{};
  JointArray<double> qdot{};
  double time = 0.0;
  std::array<bool, 2> contact{false, false};  // left, right foot

  bool finite() const;
};

// Privileged per-episode physics; the quantities the history encoder regresses.
struct PhysicsParams {
  double base_mass_offset = 0.0;  // kg added to the torso
  double friction = 1.0;
  JointArray<double> motor_strength{};  // scale on PD torque
  JointArray<double> default_joint_offset{};  // rad shift of the PD target

  static PhysicsParams nominal();
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

// Domain randomization sampling ranges.
struct DrConfig {
  Range base_mass{-3.0, 3.0};          // kg
  Range friction{0.1, 1.6};
  Range motor_strength{0.9, 1.1};
  Range default_joint_pos{-0.01, 0.01};  // rad
  Range push_velocity{-0.5, 0.5};        // m/s per axis
  double push_interval = 5.0;            // s of episode time between pushes

  void validate() const;
};

// Gaussian noise scales for reference state initialization.
struct RsiNoise {
  double joint_position = 0.1;   // rad
  double root_position = 0.05;   // m
  double root_velocity = 0.2;    // m/s
  double root_rotation = 0.1;    // rad
  double root_angular_vel = 0.5; // rad/s

  static RsiNoise zero();
  void validate() const;
};

}  // namespace tracklab
