#pragma once

#include <array>

#include "tracklab/core/vec2.hpp"
#include "tracklab/motion/robot_model.hpp"

namespace tracklab {

struct KeybodyPose {
  std::array<Vec2, kNumKeybodies> pos;   // world frame, meters
  std::array<Rot2, kNumKeybodies> rot;   // world frame
};

// Keybody poses expressed in the root frame.
struct Keypose {
  std::array<Vec2, kNumKeybodies> pos;
  std::array<Rot2, kNumKeybodies> rot;
};

// World keybody poses from root pose and joint angles.
//
// Chain composition order: torso first, then each limb outward
// (shoulder->elbow->hand, hip->knee->ankle). Keybody orientation comes from
// the link the point sits on: head->torso, hand->forearm, elbow->upper arm,
// knee->thigh, ankle->shank.
//
// Throws std::invalid_argument("invalid rotation") if root_rot is not unit.
KeybodyPose forward_kinematics(const RobotModel& model, const Vec2& root_pos,
                               const Rot2& root_rot,
                               const JointArray<double>& q);

Keypose to_root_frame(const Vec2& root_pos, const Rot2& root_rot,
                      const KeybodyPose& world);

KeybodyPose from_root_frame(const Vec2& root_pos, const Rot2& root_rot,
                            const Keypose& rel);

}  // namespace tracklab
