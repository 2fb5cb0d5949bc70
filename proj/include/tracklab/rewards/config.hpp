#pragma once

#include <stdexcept>

namespace tracklab {

enum class KeybodyFrame { kRoot, kWorld };

// Tracking weights and per-term exponential scales. The defaults are the
// working configuration of the whole project; training and evaluation read
// every value from here (populated by the run config).
struct RewardConfig {
  // Tracking weights.
  double w_root_pos = 1.5;
  double w_root_vel = 1.5;
  double w_root_rot = 1.5;
  double w_keybody_pos = 3.0;
  double w_keybody_vel = 2.0;
  double w_keybody_rot = 2.0;

  // Regularization weights (negative).
  double w_action_rate = -0.1;
  double w_feet_slip = -0.1;
  double w_torque_limits = -5.0;
  double w_joint_limits = -10.0;
  double w_joint_vel = -1e-4;
  double w_joint_acc = -3e-7;

  // Exponential kernel scales.
  double sigma_root_pos = 0.5;   // m
  double sigma_keybody = 0.3;    // m
  double sigma_vel = 1.0;        // m/s
  double sigma_rot = 0.5;

  int segment_window = 5;        // H_seg, frames; 0 = step-wise
  int goal_preview = 5;          // H, frames

  // Termination thresholds.
  double term_root_height = 0.35;      // m
  double term_keybody_error = 0.5;     // m, mean world-frame error

  // Ablation switch: track keybodies against root-relative or world targets.
  KeybodyFrame keybody_frame = KeybodyFrame::kRoot;

  void validate() const {
    if (w_root_pos < 0 || w_root_vel < 0 || w_root_rot < 0 || w_keybody_pos < 0 ||
        w_keybody_vel < 0 || w_keybody_rot < 0) {
      throw std::invalid_argument("rewards: tracking weights must be >= 0");
    }
    if (!(sigma_root_pos > 0) || !(sigma_keybody > 0) || !(sigma_vel > 0) ||
        !(sigma_rot > 0)) {
      throw std::invalid_argument("rewards: sigma must be > 0");
    }
    if (segment_window < 0) throw std::invalid_argument("rewards: segment_window must be >= 0");
    if (goal_preview < 1) throw std::invalid_argument("rewards: goal_preview must be >= 1");
    if (!(term_root_height > 0) || !(term_keybody_error > 0)) {
      throw std::invalid_argument("rewards: termination thresholds must be > 0");
    }
  }
};

}  // namespace tracklab
