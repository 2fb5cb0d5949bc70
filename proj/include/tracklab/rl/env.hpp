#pragma once

#include <vector>

#include "tracklab/motion/clip.hpp"
#include "tracklab/rewards/observations.hpp"
#include "tracklab/rewards/reward.hpp"
#include "tracklab/sim/simulator.hpp"

namespace tracklab {

struct EnvConfig {
  SimConfig sim;
  RewardConfig rewards;
  DrConfig dr;
  RsiNoise rsi;
  int student_history = 10;  // K
  bool pushes_enabled = true;
  bool rsi_noise_enabled = true;
  bool randomize_start_frame = true;  // false: episodes start at frame 0
  bool dr_enabled = true;
};

struct EnvStepResult {
  double reward = 0.0;
  RewardBreakdown breakdown;
  Termination termination = Termination::kContinue;
  bool diverged = false;
};

// One tracking episode driver: owns the simulator state, the reference
// cursor (advancing one frame per control step), the proprio history and an
// independent RNG stream. Single-threaded; run many in parallel.
class TrackingEnv {
 public:
  TrackingEnv(const RobotModel& model, const EnvConfig& config,
              const std::vector<MotionClip>* clips, uint64_t seed);

  // Samples a clip (probability proportional to clip length), a start frame,
  // fresh physics parameters and noised initial state.
  void reset();
  void reset_to(int clip_index, int frame);

  const std::vector<double>& teacher_obs();          // rebuilt on demand
  const std::vector<double>& student_obs();
  const std::vector<double>& proprio_history() const { return history_.flat(); }
  // Privileged physics normalized to [-1,1] by the DR ranges: [base mass,
  // friction, 10 motor strengths].
  std::vector<double> normalized_privileged() const;

  EnvStepResult step(const JointArray<double>& action);

  const SimState& state() const { return state_; }
  const MotionClip& clip() const { return (*clips_)[clip_index_]; }
  int clip_index() const { return clip_index_; }
  int cursor() const { return cursor_; }
  const PhysicsParams& params() const { return params_; }
  const JointArray<double>& prev_action() const { return prev_action_; }
  SimTelemetry& telemetry() { return telemetry_; }
  Rng& rng() { return rng_; }
  const RobotModel& model() const { return sim_.model(); }
  const EnvConfig& config() const { return config_; }
  const Simulator& simulator() const { return sim_; }

  // Bit-exact snapshot for training resume.
  void serialize(std::vector<double>& num, std::string& rng_state) const;
  void deserialize(const std::vector<double>& num, const std::string& rng_state);

 private:
  Simulator sim_;
  EnvConfig config_;
  const std::vector<MotionClip>* clips_;
  Rng rng_;

  SimState state_;
  PhysicsParams params_;
  int clip_index_ = 0;
  int cursor_ = 0;  // reference frame matching the current state
  JointArray<double> prev_action_{};
  HistoryBuffer history_;
  double next_push_time_ = 0.0;
  SimTelemetry telemetry_;

  std::vector<double> obs_scratch_;
  std::vector<double> frame_scratch_;

  void push_history_frame();
  int sample_clip_index();
};

}  // namespace tracklab
