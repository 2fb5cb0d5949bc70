#pragma once

#include <string>

#include "tracklab/cli/config.hpp"

namespace tracklab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;        // invalid configuration
inline constexpr int kExitMissingInput = 3;  // clips/checkpoints not found
inline constexpr int kExitDiverged = 4;      // training collapsed
inline constexpr int kExitIncompatible = 5;  // checkpoint/architecture mismatch

struct GenMotionsArgs {
  std::string kind = "walk";
  double duration = 4.0;
  uint64_t seed = 1;
  std::string out;       // file for count==1, directory otherwise
  int count = 1;
  double dt = 0.02;
  double stride = 0.35;
  double period = 0.9;
  double squat_depth = 0.3;
  double amplitude = 1.0;
};
int cmd_gen_motions(const GenMotionsArgs& args);

struct CurateArgs {
  std::string policy_ckpt;
  std::string clips_dir;
  std::string report;
  std::string config_path;  // optional; defaults when empty
  int trials = 8;
  double threshold = 0.5;
  uint64_t seed = 1;
};
int cmd_curate(const CurateArgs& args);

struct TrainTeacherArgs {
  std::string config_path;  // optional
  std::string clips_dir;
  std::string out_dir;
  std::string resume;       // train-state file
  int iterations_override = -1;
};
int cmd_train_teacher(const TrainTeacherArgs& args);

struct DistillArgs {
  std::string config_path;
  std::string teacher_ckpt;
  std::string clips_dir;
  std::string out_dir;
  std::string resume;
  int iterations_override = -1;
};
int cmd_distill(const DistillArgs& args);

struct EvalArgs {
  std::string config_path;
  std::string ckpt;
  std::string clips_dir;
  std::string test_clips_dir;  // optional second split
  std::string out_dir;
  int trials = -1;             // -1: from config
  uint64_t seed = 0;
  bool student = false;        // checkpoint holds a student policy
  bool kinematic_replay = false;
};
int cmd_eval(const EvalArgs& args);

struct AblateArgs {
  std::string config_path;
  std::string clips_dir;
  std::string test_clips_dir;
  std::string out_dir;
  int iterations_override = -1;
  std::string variants;  // comma list; empty = all
};
int cmd_ablate(const AblateArgs& args);

// Resolves a clip directory against $TRACKLAB_DATA when the path is empty.
std::string resolve_data_dir(const std::string& dir);

}  // namespace tracklab::cli
