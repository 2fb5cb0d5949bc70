#include "tracklab/rl/rollout.hpp"

#include <stdexcept>

namespace tracklab {

std::vector<std::unique_ptr<TrackingEnv>> make_envs(const RobotModel& model,
                                                    const EnvConfig& config,
                                                    const std::vector<MotionClip>* clips,
                                                    int count, uint64_t master_seed) {
  std::vector<std::unique_ptr<TrackingEnv>> envs;
  envs.reserve(count);
  for (int i = 0; i < count; ++i) {
    envs.push_back(std::make_unique<TrackingEnv>(
        model, config, clips, Rng::derive_seed(master_seed, 1000 + i)));
  }
  return envs;
}

RolloutBatch collect_rollouts(OmoePolicy& policy,
                              std::vector<std::unique_ptr<TrackingEnv>>& envs,
                              int steps, bool parallel) {
  const int n = static_cast<int>(envs.size());
  if (n == 0) throw std::invalid_argument("collect_rollouts: no environments");
  const int obs_dim = policy.config().obs_dim;
  const int act_dim = policy.config().action_dim;
  const int hist_dim = static_cast<int>(envs[0]->proprio_history().size());

  RolloutBatch batch;
  batch.num_envs = n;
  batch.steps = steps;
  batch.provenance = "teacher";
  batch.obs = Mat(n * steps, obs_dim);
  batch.actions = Mat(n * steps, act_dim);
  batch.log_probs.assign(static_cast<size_t>(n) * steps, 0.0);
  batch.rewards.assign(static_cast<size_t>(n) * steps, 0.0);
  batch.values.assign(static_cast<size_t>(n) * steps, 0.0);
  batch.dones.assign(static_cast<size_t>(n) * steps, 0);
  batch.privileged = Mat(n * steps, 12);
  batch.histories = Mat(n * steps, hist_dim);
  batch.bootstrap_values.assign(n, 0.0);

  Mat obs_now(n, obs_dim);
  const Mat log_std = policy.clamped_log_std();

  auto gather_obs = [&](Mat& dst) {
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
      const std::vector<double>& o = envs[i]->teacher_obs();
      std::copy(o.begin(), o.end(), dst.v.begin() + static_cast<size_t>(i) * obs_dim);
    }
  };

  std::vector<RewardBreakdown> step_breakdowns(n);
  std::vector<uint8_t> done_flags(n), fail_flags(n), diverged_flags(n);

  for (int t = 0; t < steps; ++t) {
    gather_obs(obs_now);
    const auto fwd = policy.act(obs_now);
    batch.gs_fallbacks += fwd.gs_fallbacks;

    const int base = t * n;
    std::copy(obs_now.v.begin(), obs_now.v.end(),
              batch.obs.v.begin() + static_cast<size_t>(base) * obs_dim);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
      const int row = base + i;
      const auto sample = sample_action(
          fwd.mean.v.data() + static_cast<size_t>(i) * act_dim,
          log_std.v.data(), act_dim, envs[i]->rng());
      JointArray<double> action{};
      for (int j = 0; j < act_dim; ++j) {
        action[j] = sample.action[j];
        batch.actions.at(row, j) = sample.action[j];
      }
      batch.log_probs[row] = sample.log_prob;
      batch.values[row] = fwd.value.at(i, 0);

      const auto priv = envs[i]->normalized_privileged();
      std::copy(priv.begin(), priv.end(),
                batch.privileged.v.begin() + static_cast<size_t>(row) * 12);
      const auto& hist = envs[i]->proprio_history();
      std::copy(hist.begin(), hist.end(),
                batch.histories.v.begin() + static_cast<size_t>(row) * hist_dim);

      const EnvStepResult res = envs[i]->step(action);
      batch.rewards[row] = res.reward;
      step_breakdowns[i] = res.breakdown;
      done_flags[i] = res.termination == Termination::kDone ? 1 : 0;
      fail_flags[i] = res.termination == Termination::kFail ? 1 : 0;
      diverged_flags[i] = res.diverged ? 1 : 0;
      if (res.termination != Termination::kContinue) {
        batch.dones[row] = 1;
        envs[i]->reset();
      }
    }

    // Serialized bookkeeping keeps the accumulation order fixed.
    int diverged_count = 0;
    for (int i = 0; i < n; ++i) {
      const RewardBreakdown& b = step_breakdowns[i];
      batch.reward_sums.root_pos += b.root_pos;
      batch.reward_sums.root_vel += b.root_vel;
      batch.reward_sums.root_rot += b.root_rot;
      batch.reward_sums.keybody_pos += b.keybody_pos;
      batch.reward_sums.keybody_vel += b.keybody_vel;
      batch.reward_sums.keybody_rot += b.keybody_rot;
      batch.reward_sums.action_rate += b.action_rate;
      batch.reward_sums.feet_slip += b.feet_slip;
      batch.reward_sums.torque_limits += b.torque_limits;
      batch.reward_sums.joint_limits += b.joint_limits;
      batch.reward_sums.joint_vel += b.joint_vel;
      batch.reward_sums.joint_acc += b.joint_acc;
      batch.episodes_done += done_flags[i];
      batch.episodes_failed += fail_flags[i];
      diverged_count += diverged_flags[i];
    }
    if (diverged_count == n) {
      throw std::runtime_error("all environments diverged in one step");
    }
  }

  // Bootstrap values for the state each env ended in.
  gather_obs(obs_now);
  const auto tail = policy.act(obs_now);
  for (int i = 0; i < n; ++i) batch.bootstrap_values[i] = tail.value.at(i, 0);
  return batch;
}

}  // namespace tracklab
