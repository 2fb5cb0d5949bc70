#pragma once

#include <memory>
#include <string>

#include "tracklab/nn/adam.hpp"
#include "tracklab/nn/history_encoder.hpp"
#include "tracklab/rl/gae.hpp"
#include "tracklab/rl/rollout.hpp"

namespace tracklab {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  double learning_rate = 3e-4;
  double kl_target = 0.01;   // adaptive shrink/grow around this
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double max_grad_norm = 1.0;
  int rollout_steps = 24;    // T
  int num_envs = 256;
  int iterations = 2000;
  int checkpoint_every = 200;

  void validate() const;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  int skipped_updates = 0;  // non-finite loss -> skip + halve LR
};

// Clipped-surrogate PPO update over one collected batch. Advantages are
// normalized batch-wide before the policy loss; the learning rate adapts to
// the measured KL after every epoch.
PpoStats ppo_update(OmoePolicy& policy, const RolloutBatch& batch,
                    const GaeResult& gae, PpoConfig& cfg, Adam& optimizer,
                    Rng& shuffle_rng);

// One regression pass of the history encoder against the batch's normalized
// privileged parameters; returns the mean-squared error before the update.
double train_history_encoder(HistoryEncoder& encoder, const RolloutBatch& batch,
                             Adam& optimizer, int minibatches = 4);

struct IterationStats {
  int iteration = 0;
  double reward_mean = 0.0;       // per-step mean total reward
  double success_rate = -1.0;     // episodes done / ended; -1 if none ended
  long episodes_done = 0;
  long episodes_failed = 0;
  RewardBreakdown term_means;     // per-step means of each reward term
  PpoStats ppo;
  double encoder_loss = 0.0;
  long torque_saturations = 0;
  long pushes = 0;
  long divergences = 0;
  long gs_fallbacks = 0;
};

// Owns the full teacher-training state: policy, value/encoder optimizers,
// environments and the RNG streams. One iterate() = collect, GAE, PPO
// update, encoder regression.
class TeacherTrainer {
 public:
  TeacherTrainer(const RobotModel& model, std::vector<MotionClip> clips,
                 const EnvConfig& env_config, PpoConfig ppo_config,
                 PolicyConfig policy_config, EncoderConfig encoder_config,
                 uint64_t seed);

  IterationStats iterate();
  int iteration() const { return iteration_; }

  OmoePolicy& policy() { return policy_; }
  HistoryEncoder& encoder() { return encoder_; }
  const PpoConfig& ppo_config() const { return ppo_config_; }
  const std::vector<MotionClip>& clips() const { return clips_; }
  std::vector<std::unique_ptr<TrackingEnv>>& envs() { return envs_; }
  bool parallel_rollouts = true;

  // Combined policy+encoder weights for deployment/eval.
  void save_policy_checkpoint(const std::string& path);
  void load_policy_checkpoint(const std::string& path);

  // Full training state (weights, optimizer moments, env snapshots, RNG
  // streams, iteration counter) for bit-exact resume.
  void save_train_state(const std::string& path);
  void load_train_state(const std::string& path);

 private:
  RobotModel model_;
  std::vector<MotionClip> clips_;
  PpoConfig ppo_config_;
  OmoePolicy policy_;
  HistoryEncoder encoder_;
  Adam policy_opt_;
  Adam encoder_opt_;
  std::vector<std::unique_ptr<TrackingEnv>> envs_;
  Rng trainer_rng_;
  int iteration_ = 0;
};

// Checkpoint helpers shared by the CLI: policy plus encoder in one file.
void save_policy_and_encoder(OmoePolicy& policy, HistoryEncoder& encoder,
                             const std::string& path);
void load_policy_and_encoder(OmoePolicy& policy, HistoryEncoder& encoder,
                             const std::string& path);
std::string policy_encoder_arch(OmoePolicy& policy, HistoryEncoder& encoder);

}  // namespace tracklab
