#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tracklab/motion/clip.hpp"

namespace tracklab {

struct TrialResult {
  bool success = false;
  double mpkpe_mm = 0.0;   // mean per-keybody position error, root frame
  double mpjpe_rad = 0.0;  // mean per-joint position error
};

// Runs one rollout of some policy on a clip; the trial index seeds the run.
using TrialRunner = std::function<TrialResult(const MotionClip&, int trial)>;

struct ClipReport {
  std::string name;
  double success_rate = 0.0;
  double mean_mpkpe_mm = 0.0;
  double mean_mpjpe_rad = 0.0;
  bool kept = false;
};

struct CurationResult {
  std::vector<int> kept_indices;  // into the input clip list
  std::vector<ClipReport> reports;
};

// Keeps a clip iff its empirical success rate over `trials` rollouts is
// >= threshold. Throws on an empty clip list, trials < 1, or a threshold
// outside [0, 1].
CurationResult curate_dataset(const TrialRunner& runner,
                              const std::vector<MotionClip>& clips, int trials,
                              double threshold);

void write_curation_report(const CurationResult& result, const std::string& path);

}  // namespace tracklab
