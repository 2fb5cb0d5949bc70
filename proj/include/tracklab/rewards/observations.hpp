#pragma once

#include <vector>

#include "tracklab/motion/clip.hpp"
#include "tracklab/rewards/config.hpp"
#include "tracklab/sim/state.hpp"

namespace tracklab {

// Teacher state layout (73 dims):
//   [q(10), qdot(10), v(2), omega(1), keybody pos rel(18), keybody rot rel(18),
//    root pos error(2), root rot error(2), prev action(10)]
// Teacher goal: goal_preview frames of
//   [q_ref(10), qdot_ref(10), keybody pos rel ref(18), keybody rot rel ref(18)]
inline constexpr int kTeacherStateDim = 73;
inline constexpr int kTeacherGoalFrameDim = 56;

// Student proprio frame (33 dims): [q(10), qdot(10), omega(1), rot err(2),
// action(10)]; the student state is K stacked frames (oldest first).
// Student goal: goal_preview frames of [q_ref(10), qdot_ref(10),
// keybody rot rel ref(18)] — no global positions or linear velocities.
inline constexpr int kStudentFrameDim = 33;
inline constexpr int kStudentGoalFrameDim = 38;

int teacher_obs_dim(const RewardConfig& cfg);
int student_obs_dim(const RewardConfig& cfg, int history_len);

// Appends the teacher observation for reference frame t; the clip is clamped
// at its end for the preview.
void build_teacher_obs(const RobotModel& model, const SimState& state,
                       const JointArray<double>& prev_action, const MotionClip& clip,
                       int t, const RewardConfig& cfg, std::vector<double>& out);

// One student proprio frame from the current state (for the history buffer).
void student_proprio_frame(const SimState& state, const JointArray<double>& action,
                           const MotionClip& clip, int t, std::vector<double>& out);

// K-step rolling proprio history, zero-padded after reset.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int history_len = 0)
      : len_(history_len), data_(static_cast<size_t>(history_len) * kStudentFrameDim, 0.0) {}

  void reset() { std::fill(data_.begin(), data_.end(), 0.0); }
  void push(const std::vector<double>& frame);
  // Frames oldest-to-newest, length K * kStudentFrameDim.
  const std::vector<double>& flat() const { return data_; }
  int history_len() const { return len_; }

 private:
  int len_;
  std::vector<double> data_;
};

void build_student_obs(const HistoryBuffer& history, const MotionClip& clip, int t,
                       const RewardConfig& cfg, std::vector<double>& out);

}  // namespace tracklab
