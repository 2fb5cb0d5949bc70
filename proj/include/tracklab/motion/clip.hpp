#pragma once

#include <string>
#include <vector>

#include "tracklab/core/vec2.hpp"
#include "tracklab/motion/fk.hpp"
#include "tracklab/motion/robot_model.hpp"

namespace tracklab {

struct MotionFrame {
  Vec2 root_pos;
  Rot2 root_rot;
  JointArray<double> q{};
};

// Fixed-rate reference trajectory. Stored fields are dt and frames; every
// velocity/keypose below is derived at load time (central differences inside,
// one-sided at the ends) and never serialized.
struct MotionClip {
  double dt = 0.02;
  std::vector<MotionFrame> frames;
  std::string name;  // used for category grouping in diagnostics

  // Derived, same length as frames:
  std::vector<Vec2> root_vel;
  std::vector<double> root_angvel;
  std::vector<JointArray<double>> qdot;
  std::vector<KeybodyPose> keybody;       // world-frame poses
  std::vector<std::array<Vec2, kNumKeybodies>> keybody_vel;  // world, m/s
  std::vector<Keypose> keybody_rel;       // root-frame poses (cache)

  int num_frames() const { return static_cast<int>(frames.size()); }
  double duration() const { return dt * (num_frames() - 1); }
  int clamp_frame(int t) const {
    return t < 0 ? 0 : (t >= num_frames() ? num_frames() - 1 : t);
  }

  // Fills all derived arrays; clamps q to joint limits first. Throws on
  // fewer than 2 frames or non-unit rotations.
  void derive(const RobotModel& model);
};

}  // namespace tracklab
