#include "tracklab/motion/clip.hpp"

#include <stdexcept>
#include <string>

namespace tracklab {

namespace {

// Central difference inside, one-sided at the ends.
template <typename Get>
double fd_scalar(const Get& get, int t, int n, double dt) {
  if (t == 0) return (get(1) - get(0)) / dt;
  if (t == n - 1) return (get(n - 1) - get(n - 2)) / dt;
  return (get(t + 1) - get(t - 1)) / (2.0 * dt);
}

}  // namespace

void MotionClip::derive(const RobotModel& model) {
  const int n = num_frames();
  if (n < 2) throw std::invalid_argument("clip needs at least 2 frames");
  if (!(dt > 0.0)) throw std::invalid_argument("clip dt must be > 0");

  for (auto& f : frames) {
    if (!f.root_rot.is_unit()) throw std::invalid_argument("clip frame rotation not unit");
    for (int j = 0; j < kNumJoints; ++j) f.q[j] = model.clamp_joint(j, f.q[j]);
  }

  root_vel.resize(n);
  root_angvel.resize(n);
  qdot.resize(n);
  keybody.resize(n);
  keybody_vel.resize(n);
  keybody_rel.resize(n);

  for (int t = 0; t < n; ++t) {
    keybody[t] = forward_kinematics(model, frames[t].root_pos, frames[t].root_rot,
                                    frames[t].q);
    keybody_rel[t] = to_root_frame(frames[t].root_pos, frames[t].root_rot, keybody[t]);
  }

  auto ang_delta = [&](int a, int b) {
    // Relative angle between consecutive frames; wrap-safe.
    return frames[b].root_rot.relative_to(frames[a].root_rot).angle();
  };

  for (int t = 0; t < n; ++t) {
    root_vel[t].x = fd_scalar([&](int i) { return frames[i].root_pos.x; }, t, n, dt);
    root_vel[t].z = fd_scalar([&](int i) { return frames[i].root_pos.z; }, t, n, dt);
    if (t == 0) {
      root_angvel[t] = ang_delta(0, 1) / dt;
    } else if (t == n - 1) {
      root_angvel[t] = ang_delta(n - 2, n - 1) / dt;
    } else {
      root_angvel[t] = (ang_delta(t - 1, t) + ang_delta(t, t + 1)) / (2.0 * dt);
    }
    for (int j = 0; j < kNumJoints; ++j) {
      qdot[t][j] = fd_scalar([&](int i) { return frames[i].q[j]; }, t, n, dt);
    }
    for (int k = 0; k < kNumKeybodies; ++k) {
      keybody_vel[t][k].x =
          fd_scalar([&](int i) { return keybody[i].pos[k].x; }, t, n, dt);
      keybody_vel[t][k].z =
          fd_scalar([&](int i) { return keybody[i].pos[k].z; }, t, n, dt);
    }
  }
}

}  // namespace tracklab
