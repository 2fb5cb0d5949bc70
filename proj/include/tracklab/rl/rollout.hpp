#pragma once

#include <memory>
#include <string>

#include "tracklab/nn/policy.hpp"
#include "tracklab/rl/env.hpp"

namespace tracklab {

// Per-env, per-step trajectories, row index = t * num_envs + env.
struct RolloutBatch {
  int num_envs = 0;
  int steps = 0;
  std::string provenance;  // "teacher" or "student": whose actions drove it

  Mat obs;            // (N*T, obs_dim)
  Mat actions;        // (N*T, action_dim)
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<uint8_t> dones;        // episode ended after this step
  Mat privileged;     // (N*T, 12) normalized physics params
  Mat histories;      // (N*T, K*33) proprio history at the step's state
  std::vector<double> bootstrap_values;  // (N) value of the post-rollout state

  // Telemetry of the collection window.
  RewardBreakdown reward_sums;   // summed over all steps
  long episodes_done = 0;        // completed the clip
  long episodes_failed = 0;
  long gs_fallbacks = 0;

  int rows() const { return num_envs * steps; }
  int at(int t, int env) const { return t * num_envs + env; }
};

// Fills a batch by rolling the policy's stochastic actions through the
// environments; episodes hitting done/fail restart with fresh RSI inside the
// window. With parallel=false the same work runs on one thread and produces
// a bit-identical batch (kept as the testing reference).
//
// Throws std::runtime_error if every environment diverges in one step.
RolloutBatch collect_rollouts(OmoePolicy& policy,
                              std::vector<std::unique_ptr<TrackingEnv>>& envs,
                              int steps, bool parallel = true);

std::vector<std::unique_ptr<TrackingEnv>> make_envs(const RobotModel& model,
                                                    const EnvConfig& config,
                                                    const std::vector<MotionClip>* clips,
                                                    int count, uint64_t master_seed);

}  // namespace tracklab
