#include "tracklab/rl/env.hpp"

#include <stdexcept>

namespace tracklab {

TrackingEnv::TrackingEnv(const RobotModel& model, const EnvConfig& config,
                         const std::vector<MotionClip>* clips, uint64_t seed)
    : sim_(model, config.sim),
      config_(config),
      clips_(clips),
      rng_(seed),
      history_(config.student_history) {
  if (!clips_ || clips_->empty()) throw std::invalid_argument("env needs clips");
  config_.rewards.validate();
  config_.dr.validate();
  config_.rsi.validate();
  reset();
}

int TrackingEnv::sample_clip_index() {
  if (clips_->size() == 1) return 0;
  // Probability proportional to clip length so long clips are not
  // undertrained.
  double total = 0.0;
  for (const auto& c : *clips_) total += c.num_frames();
  double u = rng_.uniform(0.0, total);
  for (size_t i = 0; i < clips_->size(); ++i) {
    u -= (*clips_)[i].num_frames();
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(clips_->size()) - 1;
}

void TrackingEnv::reset() {
  const int clip_idx = sample_clip_index();
  const MotionClip& clip = (*clips_)[clip_idx];
  int frame = 0;
  if (config_.randomize_start_frame && clip.num_frames() > 2) {
    frame = static_cast<int>(rng_.uniform_index(clip.num_frames() - 1));
  }
  reset_to(clip_idx, frame);
}

void TrackingEnv::reset_to(int clip_index, int frame) {
  clip_index_ = clip_index;
  cursor_ = frame;
  params_ = config_.dr_enabled ? Simulator::sample_dr(config_.dr, rng_)
                               : PhysicsParams::nominal();
  const RsiNoise noise =
      config_.rsi_noise_enabled ? config_.rsi : RsiNoise::zero();
  state_ = sim_.reset_rsi(clip(), frame, noise, rng_);
  prev_action_ = clip().frames[frame].q;
  history_.reset();
  push_history_frame();
  next_push_time_ = config_.dr.push_interval;
}

void TrackingEnv::push_history_frame() {
  student_proprio_frame(state_, prev_action_, clip(), cursor_, frame_scratch_);
  history_.push(frame_scratch_);
}

const std::vector<double>& TrackingEnv::teacher_obs() {
  obs_scratch_.clear();
  build_teacher_obs(model(), state_, prev_action_, clip(), cursor_, config_.rewards,
                    obs_scratch_);
  return obs_scratch_;
}

const std::vector<double>& TrackingEnv::student_obs() {
  obs_scratch_.clear();
  build_student_obs(history_, clip(), cursor_, config_.rewards, obs_scratch_);
  return obs_scratch_;
}

std::vector<double> TrackingEnv::normalized_privileged() const {
  auto norm = [](double v, const Range& r) {
    if (r.max <= r.min) return 0.0;
    return 2.0 * (v - r.min) / (r.max - r.min) - 1.0;
  };
  std::vector<double> out;
  out.reserve(12);
  out.push_back(norm(params_.base_mass_offset, config_.dr.base_mass));
  out.push_back(norm(params_.friction, config_.dr.friction));
  for (int j = 0; j < kNumJoints; ++j) {
    out.push_back(norm(params_.motor_strength[j], config_.dr.motor_strength));
  }
  return out;
}

EnvStepResult TrackingEnv::step(const JointArray<double>& action) {
  EnvStepResult result;
  const SimState prev = state_;

  // Commanded torque at the step start; used for the torque-limit penalty.
  const JointArray<double> torques =
      sim_.pd_torque(state_.q, state_.qdot, action, params_, nullptr);

  try {
    state_ = sim_.control_step(state_, action, params_, &telemetry_);
  } catch (const SimDivergedError&) {
    ++telemetry_.divergences;
    result.diverged = true;
    result.termination = Termination::kFail;
    result.reward = 0.0;
    return result;
  }

  ++cursor_;
  if (config_.pushes_enabled && state_.time >= next_push_time_) {
    state_ = Simulator::apply_push(state_, config_.dr, rng_);
    next_push_time_ += config_.dr.push_interval;
    ++telemetry_.pushes;
  }

  result.breakdown = total_reward(model(), state_, prev, action, prev_action_,
                                  torques, clip(), cursor_, config_.rewards);
  result.reward = result.breakdown.total();
  result.termination = check_termination(model(), state_, clip(), cursor_,
                                         config_.rewards);

  prev_action_ = action;
  push_history_frame();
  return result;
}

void TrackingEnv::serialize(std::vector<double>& num, std::string& rng_state) const {
  num.clear();
  num.push_back(state_.root_pos.x);
  num.push_back(state_.root_pos.z);
  num.push_back(state_.root_rot.c);
  num.push_back(state_.root_rot.s);
  num.push_back(state_.root_vel.x);
  num.push_back(state_.root_vel.z);
  num.push_back(state_.root_angvel);
  for (int j = 0; j < kNumJoints; ++j) num.push_back(state_.q[j]);
  for (int j = 0; j < kNumJoints; ++j) num.push_back(state_.qdot[j]);
  num.push_back(state_.time);
  num.push_back(state_.contact[0] ? 1.0 : 0.0);
  num.push_back(state_.contact[1] ? 1.0 : 0.0);
  num.push_back(params_.base_mass_offset);
  num.push_back(params_.friction);
  for (int j = 0; j < kNumJoints; ++j) num.push_back(params_.motor_strength[j]);
  for (int j = 0; j < kNumJoints; ++j) num.push_back(params_.default_joint_offset[j]);
  num.push_back(static_cast<double>(clip_index_));
  num.push_back(static_cast<double>(cursor_));
  for (int j = 0; j < kNumJoints; ++j) num.push_back(prev_action_[j]);
  num.push_back(next_push_time_);
  const auto& hist = history_.flat();
  num.insert(num.end(), hist.begin(), hist.end());
  rng_state = rng_.save_state();
}

void TrackingEnv::deserialize(const std::vector<double>& num,
                              const std::string& rng_state) {
  size_t p = 0;
  auto next = [&] { return num.at(p++); };
  state_.root_pos = {next(), next()};
  state_.root_rot = {next(), next()};
  state_.root_vel = {next(), next()};
  state_.root_angvel = next();
  for (int j = 0; j < kNumJoints; ++j) state_.q[j] = next();
  for (int j = 0; j < kNumJoints; ++j) state_.qdot[j] = next();
  state_.time = next();
  state_.contact[0] = next() != 0.0;
  state_.contact[1] = next() != 0.0;
  params_.base_mass_offset = next();
  params_.friction = next();
  for (int j = 0; j < kNumJoints; ++j) params_.motor_strength[j] = next();
  for (int j = 0; j < kNumJoints; ++j) params_.default_joint_offset[j] = next();
  clip_index_ = static_cast<int>(next());
  cursor_ = static_cast<int>(next());
  for (int j = 0; j < kNumJoints; ++j) prev_action_[j] = next();
  next_push_time_ = next();
  HistoryBuffer fresh(config_.student_history);
  std::vector<double> frame(kStudentFrameDim);
  const int k = config_.student_history;
  for (int f = 0; f < k; ++f) {
    for (int c = 0; c < kStudentFrameDim; ++c) frame[c] = next();
    fresh.push(frame);
  }
  history_ = fresh;
  rng_.load_state(rng_state);
  if (p != num.size()) throw std::invalid_argument("env snapshot size mismatch");
}

}  // namespace tracklab
