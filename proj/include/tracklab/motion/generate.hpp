#pragma once

#include <string>

#include "tracklab/motion/clip.hpp"

namespace tracklab {

enum class MotionKind { kStand, kWalk, kSquat, kKick, kWave, kComposite };

MotionKind parse_motion_kind(const std::string& name);  // throws on unknown kind
std::string motion_kind_name(MotionKind kind);

struct GenParams {
  double stride = 0.35;       // walk: root advance per gait cycle, m
  double period = 0.9;        // walk gait cycle, s
  double squat_depth = 0.30;  // m
  double squat_period = 2.0;  // s
  double amplitude = 1.0;     // scales kick/wave joint excursions
  double stand_height = 0.88; // root height of the base stance, m
  double max_joint_speed = 9.0;  // rad/s smoothness bound

  void validate() const;  // throws std::invalid_argument on out-of-range values
};

// Deterministic synthetic reference motions. Gaits are built from planted
// foot anchors plus closed-form two-link leg IK, so joint targets stay
// consistent with the commanded root trajectory. The seed only affects the
// composite kind (segment selection); the base kinds are pure functions of
// the parameters.
//
// Throws std::invalid_argument on unknown kind, bad params, or when the
// generated clip exceeds params.max_joint_speed.
MotionClip generate_motion(MotionKind kind, const GenParams& params, double duration,
                           double dt, uint64_t seed, const RobotModel& model);

// Two-link leg IK in the torso frame: returns {hip, knee, ankle} angles that
// place the ankle at `target` (expressed relative to the hip, torso frame)
// with the foot kept level in the world. Targets beyond reach are clamped.
struct LegIk {
  double hip;
  double knee;
  double ankle;
};
LegIk leg_ik(const RobotModel& model, const Vec2& hip_to_ankle, double torso_pitch);

}  // namespace tracklab
