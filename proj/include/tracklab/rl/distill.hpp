#pragma once

#include "tracklab/rl/ppo.hpp"

namespace tracklab {

struct DistillConfig {
  int num_envs = 32;
  int rollout_steps = 24;
  int iterations = 400;
  double learning_rate = 1e-3;
  int epochs = 2;
  int minibatches = 8;
  int buffer_cap = 16384;   // aggregated (state, teacher action) rows
  int eval_envs = 8;        // held-out rollouts for the reported MSE
  int eval_steps = 48;
  int checkpoint_every = 100;

  void validate() const;
};

struct DistillStats {
  int iteration = 0;
  double bc_loss = 0.0;        // training MSE over the aggregate buffer
  double held_out_mse = 0.0;   // fresh student rollouts, per-dim action MSE
  long buffer_rows = 0;
};

// DAgger distillation: the student drives the environments with its own mean
// actions, the frozen teacher labels every visited state, and the student
// minimizes the L2 action gap over the aggregated dataset. The frozen
// history encoder supplies the latent appended to the student observation.
class StudentTrainer {
 public:
  StudentTrainer(const RobotModel& model, std::vector<MotionClip> clips,
                 const EnvConfig& env_config, DistillConfig config,
                 PolicyConfig student_config, OmoePolicy teacher,
                 HistoryEncoder encoder, uint64_t seed);

  DistillStats iterate();
  int iteration() const { return iteration_; }

  OmoePolicy& student() { return student_; }
  OmoePolicy& teacher() { return teacher_; }
  HistoryEncoder& encoder() { return encoder_; }
  uint64_t encoder_checksum() const { return encoder_.checksum(); }

  // Student observation width: K proprio frames + goal preview + latent.
  static int student_input_dim(const EnvConfig& env_config, const EncoderConfig& enc);

  // Held-out evaluation without any training side effects.
  double held_out_mse();

  // Collects (student obs + teacher label) rows by rolling the student; the
  // returned batch is tagged with student provenance.
  RolloutBatch collect_student_batch(std::vector<std::unique_ptr<TrackingEnv>>& envs,
                                     int steps);

  void save_student_checkpoint(const std::string& path);
  void save_train_state(const std::string& path);
  void load_train_state(const std::string& path);

 private:
  RobotModel model_;
  std::vector<MotionClip> clips_;
  DistillConfig config_;
  OmoePolicy teacher_;
  HistoryEncoder encoder_;
  uint64_t frozen_checksum_;
  OmoePolicy student_;
  Adam student_opt_;
  std::vector<std::unique_ptr<TrackingEnv>> envs_;
  std::vector<std::unique_ptr<TrackingEnv>> eval_envs_;
  Rng trainer_rng_;
  int iteration_ = 0;

  // Aggregate DAgger dataset.
  Mat buffer_obs_;
  Mat buffer_labels_;
  int buffer_rows_ = 0;
  int buffer_next_ = 0;  // ring cursor once full

  void append_to_buffer(const Mat& obs, const Mat& labels, int rows);
};

}  // namespace tracklab
