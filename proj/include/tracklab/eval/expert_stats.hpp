#pragma once

#include <map>
#include <string>
#include <vector>

#include "tracklab/nn/policy.hpp"
#include "tracklab/rewards/config.hpp"
#include "tracklab/motion/clip.hpp"
#include "tracklab/motion/robot_model.hpp"

namespace tracklab {

struct ExpertStats {
  // Category -> mean router weight per expert; each row sums to 1.
  std::map<std::string, std::vector<double>> activation;
  std::map<std::string, long> frames_per_category;
};

// Clip category: the leading letters of the clip name ("walk_03" -> "walk").
std::string clip_category(const std::string& name);

// Router activation frequencies over the reference states of each clip
// (states taken from the clips themselves, so the statistics describe the
// policy's routing across motion categories, not one rollout's noise).
ExpertStats expert_stats(OmoePolicy& policy, const RobotModel& model,
                         const std::vector<MotionClip>& clips, const RewardConfig& cfg);

// Raw orthogonalized features for external embedding tools: one row per
// (frame, expert), d columns, tab-separated with a header row.
void dump_expert_features(OmoePolicy& policy, const RobotModel& model,
                          const std::vector<MotionClip>& clips, const RewardConfig& cfg,
                          const std::string& path);

void write_expert_stats(const ExpertStats& stats, const std::string& path);

}  // namespace tracklab
