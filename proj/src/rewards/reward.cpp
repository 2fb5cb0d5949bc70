#include "tracklab/rewards/reward.hpp"

#include <cmath>
#include <limits>

#include "tracklab/motion/fk.hpp"

namespace tracklab {

namespace {

double sq(double v) { return v * v; }

const Vec2& ref_keybody_pos(const MotionClip& clip, int frame, int k,
                            const RewardConfig& cfg) {
  return cfg.keybody_frame == KeybodyFrame::kRoot ? clip.keybody_rel[frame].pos[k]
                                                  : clip.keybody[frame].pos[k];
}

}  // namespace

double segment_reward_global(const Vec2& root_pos, const MotionClip& clip, int t,
                             const RewardConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  for (int tau = 0; tau <= cfg.segment_window; ++tau) {
    const int f = clip.clamp_frame(t + tau);
    best = std::min(best, (root_pos - clip.frames[f].root_pos).norm2());
  }
  return std::exp(-best / sq(cfg.sigma_root_pos));
}

double segment_reward_local(const std::array<Vec2, kNumKeybodies>& keybody_pos,
                            const MotionClip& clip, int t, const RewardConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  for (int tau = 0; tau <= cfg.segment_window; ++tau) {
    const int f = clip.clamp_frame(t + tau);
    double err = 0.0;
    for (int k = 0; k < kNumKeybodies; ++k) {
      err += (keybody_pos[k] - ref_keybody_pos(clip, f, k, cfg)).norm2();
    }
    best = std::min(best, err / kNumKeybodies);
  }
  return std::exp(-best / sq(cfg.sigma_keybody));
}

RewardBreakdown total_reward(const RobotModel& model, const SimState& state,
                             const SimState& prev_state,
                             const JointArray<double>& action,
                             const JointArray<double>& prev_action,
                             const JointArray<double>& torques,
                             const MotionClip& clip, int t, const RewardConfig& cfg) {
  const int tc = clip.clamp_frame(t);
  const int tp = clip.clamp_frame(t - 1);
  const double dt = clip.dt;
  const MotionFrame& ref = clip.frames[tc];

  const KeybodyPose kb = forward_kinematics(model, state.root_pos, state.root_rot, state.q);
  const Keypose rel = to_root_frame(state.root_pos, state.root_rot, kb);
  const KeybodyPose kb_prev =
      forward_kinematics(model, prev_state.root_pos, prev_state.root_rot, prev_state.q);
  const Keypose rel_prev =
      to_root_frame(prev_state.root_pos, prev_state.root_rot, kb_prev);

  const bool world = cfg.keybody_frame == KeybodyFrame::kWorld;
  auto cur_pos = [&](int k) { return world ? kb.pos[k] : rel.pos[k]; };
  auto prev_pos = [&](int k) { return world ? kb_prev.pos[k] : rel_prev.pos[k]; };
  auto cur_rot = [&](int k) { return world ? kb.rot[k] : rel.rot[k]; };
  auto ref_rot = [&](int frame, int k) {
    return world ? clip.keybody[frame].rot[k] : clip.keybody_rel[frame].rot[k];
  };

  RewardBreakdown r;

  // Tracking terms. Position terms run through the segment window, the
  // velocity and rotation terms are step-wise.
  r.root_pos = cfg.w_root_pos * segment_reward_global(state.root_pos, clip, t, cfg);

  const double vel_err2 = (state.root_vel - clip.root_vel[tc]).norm2() +
                          sq(state.root_angvel - clip.root_angvel[tc]);
  r.root_vel = cfg.w_root_vel * std::exp(-vel_err2 / sq(cfg.sigma_vel));

  const double rot_err2 = sq(state.root_rot.c - ref.root_rot.c) +
                          sq(state.root_rot.s - ref.root_rot.s);
  r.root_rot = cfg.w_root_rot * std::exp(-rot_err2 / sq(cfg.sigma_rot));

  std::array<Vec2, kNumKeybodies> pos_now;
  for (int k = 0; k < kNumKeybodies; ++k) pos_now[k] = cur_pos(k);
  r.keybody_pos = cfg.w_keybody_pos * segment_reward_local(pos_now, clip, t, cfg);

  double kb_vel_err2 = 0.0;
  for (int k = 0; k < kNumKeybodies; ++k) {
    const Vec2 v_cur = (cur_pos(k) - prev_pos(k)) * (1.0 / dt);
    const Vec2 ref_cur = ref_keybody_pos(clip, tc, k, cfg);
    const Vec2 ref_prv = ref_keybody_pos(clip, tp, k, cfg);
    const Vec2 v_ref = (tc == tp) ? Vec2{0.0, 0.0} : (ref_cur - ref_prv) * (1.0 / dt);
    kb_vel_err2 += (v_cur - v_ref).norm2();
  }
  kb_vel_err2 /= kNumKeybodies;
  r.keybody_vel = cfg.w_keybody_vel * std::exp(-kb_vel_err2 / sq(cfg.sigma_vel));

  double kb_rot_err2 = 0.0;
  for (int k = 0; k < kNumKeybodies; ++k) {
    const Rot2 cur = cur_rot(k);
    const Rot2 target = ref_rot(tc, k);
    kb_rot_err2 += sq(cur.c - target.c) + sq(cur.s - target.s);
  }
  kb_rot_err2 /= kNumKeybodies;
  r.keybody_rot = cfg.w_keybody_rot * std::exp(-kb_rot_err2 / sq(cfg.sigma_rot));

  // Regularization penalties.
  double action_rate = 0.0, joint_vel = 0.0, joint_acc = 0.0;
  double torque_over = 0.0, limit_over = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    action_rate += sq(action[j] - prev_action[j]);
    joint_vel += sq(state.qdot[j]);
    joint_acc += sq((state.qdot[j] - prev_state.qdot[j]) / dt);
    const double soft = 0.9 * model.torque_limits[j];
    // Overage as a fraction of the limit keeps the Table weight meaningful
    // across joints with very different strengths.
    torque_over += sq(std::max(0.0, std::fabs(torques[j]) - soft) / model.torque_limits[j]);
    if (state.q[j] > model.joint_limit_max[j]) {
      limit_over += state.q[j] - model.joint_limit_max[j];
    } else if (state.q[j] < model.joint_limit_min[j]) {
      limit_over += model.joint_limit_min[j] - state.q[j];
    }
  }
  r.action_rate = cfg.w_action_rate * action_rate;
  r.joint_vel = cfg.w_joint_vel * joint_vel;
  r.joint_acc = cfg.w_joint_acc * joint_acc;
  r.torque_limits = cfg.w_torque_limits * torque_over;
  r.joint_limits = cfg.w_joint_limits * limit_over;

  double slip = 0.0;
  const int ankle_kb[2] = {kKbAnkleL, kKbAnkleR};
  for (int f = 0; f < 2; ++f) {
    if (!state.contact[f]) continue;
    const double vx = (kb.pos[ankle_kb[f]].x - kb_prev.pos[ankle_kb[f]].x) / dt;
    slip += sq(vx);
  }
  r.feet_slip = cfg.w_feet_slip * slip;

  return r;
}

Termination check_termination(const RobotModel& model, const SimState& state,
                              const MotionClip& clip, int t, const RewardConfig& cfg) {
  if (!state.finite()) return Termination::kFail;
  if (state.root_pos.z < cfg.term_root_height) return Termination::kFail;

  const KeybodyPose kb = forward_kinematics(model, state.root_pos, state.root_rot, state.q);
  const int tc = clip.clamp_frame(t);
  double err = 0.0;
  for (int k = 0; k < kNumKeybodies; ++k) {
    err += (kb.pos[k] - clip.keybody[tc].pos[k]).norm();
  }
  err /= kNumKeybodies;
  if (err > cfg.term_keybody_error) return Termination::kFail;

  if (t >= clip.num_frames() - 1) return Termination::kDone;
  return Termination::kContinue;
}

}  // namespace tracklab
