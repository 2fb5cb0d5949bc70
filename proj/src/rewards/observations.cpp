#include "tracklab/rewards/observations.hpp"

#include "tracklab/motion/fk.hpp"

namespace tracklab {

int teacher_obs_dim(const RewardConfig& cfg) {
  return kTeacherStateDim + cfg.goal_preview * kTeacherGoalFrameDim;
}

int student_obs_dim(const RewardConfig& cfg, int history_len) {
  return history_len * kStudentFrameDim + cfg.goal_preview * kStudentGoalFrameDim;
}

void build_teacher_obs(const RobotModel& model, const SimState& state,
                       const JointArray<double>& prev_action, const MotionClip& clip,
                       int t, const RewardConfig& cfg, std::vector<double>& out) {
  const int tc = clip.clamp_frame(t);
  const MotionFrame& ref = clip.frames[tc];

  const KeybodyPose kb = forward_kinematics(model, state.root_pos, state.root_rot, state.q);
  const Keypose rel = to_root_frame(state.root_pos, state.root_rot, kb);

  out.reserve(out.size() + teacher_obs_dim(cfg));
  for (int j = 0; j < kNumJoints; ++j) out.push_back(state.q[j]);
  for (int j = 0; j < kNumJoints; ++j) out.push_back(state.qdot[j]);
  out.push_back(state.root_vel.x);
  out.push_back(state.root_vel.z);
  out.push_back(state.root_angvel);
  for (int k = 0; k < kNumKeybodies; ++k) {
    out.push_back(rel.pos[k].x);
    out.push_back(rel.pos[k].z);
  }
  for (int k = 0; k < kNumKeybodies; ++k) {
    out.push_back(rel.rot[k].c);
    out.push_back(rel.rot[k].s);
  }
  out.push_back(state.root_pos.x - ref.root_pos.x);
  out.push_back(state.root_pos.z - ref.root_pos.z);
  out.push_back(state.root_rot.c - ref.root_rot.c);
  out.push_back(state.root_rot.s - ref.root_rot.s);
  for (int j = 0; j < kNumJoints; ++j) out.push_back(prev_action[j]);

  for (int h = 1; h <= cfg.goal_preview; ++h) {
    const int f = clip.clamp_frame(t + h);
    for (int j = 0; j < kNumJoints; ++j) out.push_back(clip.frames[f].q[j]);
    for (int j = 0; j < kNumJoints; ++j) out.push_back(clip.qdot[f][j]);
    const Keypose& kref = clip.keybody_rel[f];
    for (int k = 0; k < kNumKeybodies; ++k) {
      out.push_back(kref.pos[k].x);
      out.push_back(kref.pos[k].z);
    }
    for (int k = 0; k < kNumKeybodies; ++k) {
      out.push_back(kref.rot[k].c);
      out.push_back(kref.rot[k].s);
    }
  }
}

void student_proprio_frame(const SimState& state, const JointArray<double>& action,
                           const MotionClip& clip, int t, std::vector<double>& out) {
  const int tc = clip.clamp_frame(t);
  const MotionFrame& ref = clip.frames[tc];
  out.clear();
  out.reserve(kStudentFrameDim);
  for (int j = 0; j < kNumJoints; ++j) out.push_back(state.q[j]);
  for (int j = 0; j < kNumJoints; ++j) out.push_back(state.qdot[j]);
  out.push_back(state.root_angvel);
  out.push_back(state.root_rot.c - ref.root_rot.c);
  out.push_back(state.root_rot.s - ref.root_rot.s);
  for (int j = 0; j < kNumJoints; ++j) out.push_back(action[j]);
}

void HistoryBuffer::push(const std::vector<double>& frame) {
  if (len_ == 0) return;
  if (frame.size() != kStudentFrameDim) {
    throw std::invalid_argument("history frame has wrong width");
  }
  // Shift left one frame; newest goes last.
  std::move(data_.begin() + kStudentFrameDim, data_.end(), data_.begin());
  std::copy(frame.begin(), frame.end(), data_.end() - kStudentFrameDim);
}

void build_student_obs(const HistoryBuffer& history, const MotionClip& clip, int t,
                       const RewardConfig& cfg, std::vector<double>& out) {
  const auto& hist = history.flat();
  out.reserve(out.size() + hist.size() + cfg.goal_preview * kStudentGoalFrameDim);
  out.insert(out.end(), hist.begin(), hist.end());
  for (int h = 1; h <= cfg.goal_preview; ++h) {
    const int f = clip.clamp_frame(t + h);
    for (int j = 0; j < kNumJoints; ++j) out.push_back(clip.frames[f].q[j]);
    for (int j = 0; j < kNumJoints; ++j) out.push_back(clip.qdot[f][j]);
    const Keypose& kref = clip.keybody_rel[f];
    for (int k = 0; k < kNumKeybodies; ++k) {
      out.push_back(kref.rot[k].c);
      out.push_back(kref.rot[k].s);
    }
  }
}

}  // namespace tracklab
