#pragma once

#include "tracklab/motion/clip.hpp"
#include "tracklab/rewards/config.hpp"
#include "tracklab/sim/state.hpp"

namespace tracklab {

struct TrackingError {
  Vec2 root_pos_err;                 // Delta p
  Vec2 root_rot_err;                 // Delta r as a (cos, sin) pair difference
  double root_vel_err2 = 0.0;        // squared, includes angular rate
  double keybody_pos_err2 = 0.0;     // mean squared over the 9 keybodies
  double keybody_vel_err2 = 0.0;
  double keybody_rot_err2 = 0.0;
};

struct RewardBreakdown {
  double root_pos = 0.0;
  double root_vel = 0.0;
  double root_rot = 0.0;
  double keybody_pos = 0.0;
  double keybody_vel = 0.0;
  double keybody_rot = 0.0;
  double action_rate = 0.0;
  double feet_slip = 0.0;
  double torque_limits = 0.0;
  double joint_limits = 0.0;
  double joint_vel = 0.0;
  double joint_acc = 0.0;

  double total() const {
    return root_pos + root_vel + root_rot + keybody_pos + keybody_vel +
           keybody_rot + action_rate + feet_slip + torque_limits + joint_limits +
           joint_vel + joint_acc;
  }
};

// exp(-min over the clamped window [t, t+H_seg] of |p - p_ref|^2 / sigma^2).
double segment_reward_global(const Vec2& root_pos, const MotionClip& clip, int t,
                             const RewardConfig& cfg);

// Same window structure over the mean squared keybody position error;
// positions are root-relative (or world, per cfg.keybody_frame).
double segment_reward_local(const std::array<Vec2, kNumKeybodies>& keybody_pos,
                            const MotionClip& clip, int t, const RewardConfig& cfg);

// Weighted sum of the six tracking terms (position terms through the segment
// window, the rest step-wise) and the six regularization penalties. The
// breakdown re-sums to the returned total exactly.
RewardBreakdown total_reward(const RobotModel& model, const SimState& state,
                             const SimState& prev_state,
                             const JointArray<double>& action,
                             const JointArray<double>& prev_action,
                             const JointArray<double>& torques,
                             const MotionClip& clip, int t, const RewardConfig& cfg);

enum class Termination { kContinue, kFail, kDone };

// Fail on low root height or excessive mean world keybody error (strict
// inequalities); done when the final frame is reached.
Termination check_termination(const RobotModel& model, const SimState& state,
                              const MotionClip& clip, int t, const RewardConfig& cfg);

}  // namespace tracklab
