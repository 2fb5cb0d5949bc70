#pragma once

#include <string>
#include <vector>

#include "tracklab/nn/history_encoder.hpp"
#include "tracklab/nn/policy.hpp"
#include "tracklab/rl/env.hpp"

namespace tracklab {

struct ClipMetrics {
  std::string name;
  double duration_s = 0.0;
  double e_mpkpe_mm = 0.0;   // mean per-keybody position error, root frame
  double e_mpjpe_rad = 0.0;  // mean per-joint position error
  double e_pos_mm = 0.0;     // global root position error
  double e_vel_ms = 0.0;     // root linear velocity error
  double success_rate = 0.0;
  // Std over trials for the headline metric.
  double e_mpkpe_std = 0.0;
};

struct MetricsReport {
  std::vector<ClipMetrics> clips;
  ClipMetrics aggregate;  // mean over clips (name = "aggregate")
};

// Deploys the policy (mean actions) or the student (policy + frozen encoder
// latent) on every clip, `trials` rollouts each; trials differ in their
// physics randomization. Episodes start exactly on frame 0. Deterministic
// per seed. With kinematic_replay the dynamics are bypassed and the state is
// set to the reference frame each step — the self-tracking oracle.
struct EvalOptions {
  int trials = 50;
  uint64_t seed = 0;
  bool kinematic_replay = false;
  bool parallel = true;
};

MetricsReport evaluate(OmoePolicy& policy, HistoryEncoder* encoder,
                       const RobotModel& model, const std::vector<MotionClip>& clips,
                       const EnvConfig& env_config, const EvalOptions& options);

// One rollout of one clip; also used by the curation runner.
struct TrialMetrics {
  bool success = false;
  double e_mpkpe_mm = 0.0;
  double e_mpjpe_rad = 0.0;
  double e_pos_mm = 0.0;
  double e_vel_ms = 0.0;
};
TrialMetrics run_trial(OmoePolicy& policy, HistoryEncoder* encoder,
                       const RobotModel& model, const std::vector<MotionClip>& clips,
                       int clip_index, const EnvConfig& env_config, uint64_t seed,
                       bool kinematic_replay);

struct DurationBucket {
  double lo_s = 0.0;
  double hi_s = 0.0;  // exclusive; inf for the last bucket
  int clip_count = 0;
  ClipMetrics mean;
};

// Buckets per-clip rows by duration at the given boundaries; a clip exactly
// on a boundary goes to the upper bucket.
std::vector<DurationBucket> duration_buckets(const MetricsReport& report,
                                             const std::vector<double>& boundaries);

void write_report_text(const MetricsReport& report, const std::string& label,
                       std::ostream& os);
void write_report_csv(const MetricsReport& report, const std::string& path);

}  // namespace tracklab
