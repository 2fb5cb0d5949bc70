#pragma once

#include "tracklab/eval/metrics.hpp"
#include "tracklab/rl/ppo.hpp"

namespace tracklab {

// Ablation variants. The architecture family swaps the policy network, the
// reward family swaps the tracking objective; everything else (seed, budget,
// clips) is held identical.
enum class AblationVariant {
  kOmoe,       // full architecture, segment reward (the reference system)
  kMoe,        // no orthogonalization
  kMlp,        // parameter-matched plain network
  kSegment,    // alias of the reference reward config
  kStepwise,   // segment window = 0
  kGlobalOnly, // keybody terms in the world frame, step-wise
};

AblationVariant parse_ablation_variant(const std::string& name);
std::string ablation_variant_name(AblationVariant v);

// Applies a variant to base configs.
void apply_variant(AblationVariant v, PolicyConfig& policy, RewardConfig& rewards);

struct AblationRow {
  std::string variant;
  MetricsReport train;
  MetricsReport test;
};

struct AblationSettings {
  std::vector<AblationVariant> variants{
      AblationVariant::kOmoe,    AblationVariant::kMoe,      AblationVariant::kMlp,
      AblationVariant::kSegment, AblationVariant::kStepwise, AblationVariant::kGlobalOnly};
  int iterations = 300;
  int eval_trials = 16;
  uint64_t seed = 1;
};

// Trains every variant under the identical seed and budget, evaluates on the
// train and held-out sets, and returns one row per variant. Progress lines
// go to `log` when non-null.
std::vector<AblationRow> ablation_run(const RobotModel& model,
                                      const std::vector<MotionClip>& train_clips,
                                      const std::vector<MotionClip>& test_clips,
                                      const EnvConfig& env_config,
                                      const PpoConfig& ppo_config,
                                      const PolicyConfig& policy_config,
                                      const EncoderConfig& encoder_config,
                                      const AblationSettings& settings,
                                      std::ostream* log = nullptr);

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& os);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace tracklab
