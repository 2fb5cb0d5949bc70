#pragma once

#include <string>
#include <vector>

#include "tracklab/motion/clip.hpp"

namespace tracklab {

// Clip file format (JSON text):
//   version      integer, currently 1
//   dt           seconds per frame
//   joint_names  10 strings in the fixed actuation order
//   frames       [{root_pos:[x,z], root_rot:[c,s], q:[10]}, ...]
// Derived quantities are never stored; load() recomputes them.

MotionClip load_clip(const std::string& path, const RobotModel& model);
void save_clip(const MotionClip& clip, const std::string& path);

// Loads every *.json clip in a directory, sorted by filename.
std::vector<MotionClip> load_clip_dir(const std::string& dir, const RobotModel& model);

}  // namespace tracklab
