#include <doctest.h>

#include <cmath>

#include "tracklab/core/rng.hpp"
#include "tracklab/motion/generate.hpp"
#include "tracklab/rewards/observations.hpp"
#include "tracklab/rewards/reward.hpp"
#include "tracklab/sim/simulator.hpp"

using namespace tracklab;

namespace {

MotionClip make_clip(const RobotModel& m, MotionKind kind = MotionKind::kWalk,
                     double duration = 2.0) {
  GenParams p;
  return generate_motion(kind, p, duration, 0.02, 1, m);
}

SimState state_from_frame(const MotionClip& clip, int t) {
  SimState s;
  s.root_pos = clip.frames[t].root_pos;
  s.root_rot = clip.frames[t].root_rot;
  s.root_vel = clip.root_vel[t];
  s.root_angvel = clip.root_angvel[t];
  s.q = clip.frames[t].q;
  s.qdot = clip.qdot[t];
  return s;
}

// Exhaustive reference for the segment minimum.
double oracle_segment_global(const Vec2& p, const MotionClip& clip, int t,
                             const RewardConfig& cfg) {
  double best = 1e300;
  for (int tau = 0; tau <= cfg.segment_window; ++tau) {
    const int f = clip.clamp_frame(t + tau);
    const double d = (p - clip.frames[f].root_pos).norm2();
    if (d < best) best = d;
  }
  return std::exp(-best / (cfg.sigma_root_pos * cfg.sigma_root_pos));
}

}  // namespace

TEST_CASE("teacher observation layout and on-reference errors") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m);
  RewardConfig cfg;

  SimState s = state_from_frame(clip, 5);
  JointArray<double> prev_action = clip.frames[5].q;
  std::vector<double> obs;
  build_teacher_obs(m, s, prev_action, clip, 5, cfg, obs);
  REQUIRE(static_cast<int>(obs.size()) == teacher_obs_dim(cfg));
  REQUIRE(static_cast<int>(obs.size()) == 73 + 56 * cfg.goal_preview);

  // On-reference: root pos/rot errors (indices 59..62) are exactly zero and
  // the relative keyposes equal the clip's derived ones.
  for (int i = 59; i < 63; ++i) CHECK(obs[i] == doctest::Approx(0.0).epsilon(1e-12));
  for (int k = 0; k < kNumKeybodies; ++k) {
    CHECK(obs[23 + 2 * k] == doctest::Approx(clip.keybody_rel[5].pos[k].x).epsilon(1e-12));
    CHECK(obs[23 + 2 * k + 1] == doctest::Approx(clip.keybody_rel[5].pos[k].z).epsilon(1e-12));
  }

  // H = 1: goal is the single next frame.
  RewardConfig cfg1 = cfg;
  cfg1.goal_preview = 1;
  std::vector<double> obs1;
  build_teacher_obs(m, s, prev_action, clip, 5, cfg1, obs1);
  CHECK(static_cast<int>(obs1.size()) == 73 + 56);
  CHECK(obs1[73] == clip.frames[6].q[0]);
}

TEST_CASE("student observation is a strict proprio projection") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m);
  RewardConfig cfg;
  const int K = 4;

  HistoryBuffer hist(K);
  SimState s = state_from_frame(clip, 3);
  std::vector<double> frame;
  student_proprio_frame(s, clip.frames[3].q, clip, 3, frame);
  REQUIRE(static_cast<int>(frame.size()) == kStudentFrameDim);
  hist.push(frame);

  std::vector<double> obs;
  build_student_obs(hist, clip, 3, cfg, obs);
  REQUIRE(static_cast<int>(obs.size()) == student_obs_dim(cfg, K));
  REQUIRE(static_cast<int>(obs.size()) == K * 33 + 38 * cfg.goal_preview);

  // Zero padding: the first K-1 blocks are still zero after one push.
  for (int i = 0; i < (K - 1) * kStudentFrameDim; ++i) CHECK(obs[i] == 0.0);
  // The newest block carries the frame.
  CHECK(obs[(K - 1) * kStudentFrameDim] == frame[0]);

  // K = 1: only the current frame.
  HistoryBuffer h1(1);
  h1.push(frame);
  std::vector<double> obs1;
  build_student_obs(h1, clip, 3, cfg, obs1);
  CHECK(static_cast<int>(obs1.size()) == 33 + 38 * cfg.goal_preview);
}

TEST_CASE("segment rewards: examples and oracle") {
  const RobotModel m = RobotModel::standard();
  RewardConfig cfg;
  cfg.segment_window = 2;

  // Synthetic straight-line clip: root advances 0.1 m per frame.
  MotionClip clip;
  clip.dt = 0.02;
  for (int i = 0; i < 30; ++i) {
    MotionFrame f;
    f.root_pos = {0.1 * i, 0.9};
    clip.frames.push_back(f);
  }
  clip.derive(m);

  // Perfect tracking -> 1.
  CHECK(segment_reward_global(clip.frames[4].root_pos, clip, 4, cfg) == 1.0);

  // Running two frames off the reference schedule with H_seg >= 2 -> 1: the
  // pose matches ref(t+2), inside the window.
  CHECK(segment_reward_global(clip.frames[8].root_pos, clip, 6, cfg) == 1.0);

  // Window distances {0.3, 0.1, 0.2} m with sigma 0.5 -> exp(-0.04).
  // Frames at x = {0, 0.1, 0.2}; query at x = 0.3 against t producing those
  // gaps: choose p so distances to frames t..t+2 are 0.3, 0.1, 0.2.
  MotionClip tri;
  tri.dt = 0.02;
  for (double x : {0.0, 0.2, 0.5, 0.5, 0.5}) {
    MotionFrame f;
    f.root_pos = {x, 0.9};
    tri.frames.push_back(f);
  }
  tri.derive(m);
  const Vec2 probe{0.3, 0.9};  // distances: 0.3, 0.1, 0.2
  const double r = segment_reward_global(probe, tri, 0, cfg);
  CHECK(r == doctest::Approx(std::exp(-0.04)).epsilon(1e-12));

  // Random probes match the exhaustive oracle bit-exact, and the segment
  // reward dominates the step-wise one.
  Rng rng(3);
  RewardConfig step_cfg = cfg;
  step_cfg.segment_window = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p{rng.uniform(-1, 3), rng.uniform(0.5, 1.2)};
    const int t = static_cast<int>(rng.uniform_index(clip.num_frames()));
    const double seg = segment_reward_global(p, clip, t, cfg);
    CHECK(seg == oracle_segment_global(p, clip, t, cfg));
    CHECK(seg >= segment_reward_global(p, clip, t, step_cfg));
  }
}

TEST_CASE("local segment reward equals exhaustive scan and degenerates at H_seg=0") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m);
  RewardConfig cfg;
  cfg.segment_window = 3;
  RewardConfig cfg0 = cfg;
  cfg0.segment_window = 0;

  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<Vec2, kNumKeybodies> pose;
    const int t = static_cast<int>(rng.uniform_index(clip.num_frames()));
    for (int k = 0; k < kNumKeybodies; ++k) {
      pose[k] = clip.keybody_rel[t].pos[k] + Vec2{rng.gaussian(0, 0.1), rng.gaussian(0, 0.1)};
    }
    // Exhaustive oracle.
    double best = 1e300;
    for (int tau = 0; tau <= cfg.segment_window; ++tau) {
      const int f = clip.clamp_frame(t + tau);
      double err = 0.0;
      for (int k = 0; k < kNumKeybodies; ++k) {
        err += (pose[k] - clip.keybody_rel[f].pos[k]).norm2();
      }
      best = std::min(best, err / kNumKeybodies);
    }
    const double want = std::exp(-best / (cfg.sigma_keybody * cfg.sigma_keybody));
    CHECK(segment_reward_local(pose, clip, t, cfg) == want);

    // H_seg = 0 equals the step-wise criterion exactly.
    double err0 = 0.0;
    for (int k = 0; k < kNumKeybodies; ++k) {
      err0 += (pose[k] - clip.keybody_rel[t].pos[k]).norm2();
    }
    const double step = std::exp(-(err0 / kNumKeybodies) /
                                 (cfg.sigma_keybody * cfg.sigma_keybody));
    CHECK(segment_reward_local(pose, clip, t, cfg0) == step);
  }
}

TEST_CASE("perfect static tracking totals 11.5 with zero penalties") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m, MotionKind::kStand, 1.0);
  RewardConfig cfg;

  const SimState s = state_from_frame(clip, 10);
  const RewardBreakdown r = total_reward(m, s, s, clip.frames[10].q, clip.frames[10].q,
                                         JointArray<double>{}, clip, 10, cfg);
  CHECK(r.root_pos == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.root_vel == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.root_rot == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.keybody_pos == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.keybody_vel == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.keybody_rot == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.action_rate == 0.0);
  CHECK(r.feet_slip == 0.0);
  CHECK(r.torque_limits == 0.0);
  CHECK(r.joint_limits == 0.0);
  CHECK(r.joint_vel == 0.0);
  CHECK(std::fabs(r.total() - 11.5) < 1e-12);
}

TEST_CASE("joint limit overage is a linear penalty") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m, MotionKind::kStand, 1.0);
  RewardConfig cfg;

  SimState s = state_from_frame(clip, 5);
  const double delta = 0.07;
  s.q[kShoulderL] = m.joint_limit_max[kShoulderL] + delta;
  SimState prev = s;
  const RewardBreakdown r = total_reward(m, s, prev, s.q, s.q, JointArray<double>{},
                                         clip, 5, cfg);
  CHECK(r.joint_limits == doctest::Approx(-10.0 * delta).epsilon(1e-12));
}

TEST_CASE("breakdown terms equal independent recomputation") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m);
  RewardConfig cfg;
  Rng rng(11);

  for (int trial = 0; trial < 50; ++trial) {
    const int t = 1 + static_cast<int>(rng.uniform_index(clip.num_frames() - 1));
    SimState s = state_from_frame(clip, t);
    s.root_pos.x += rng.gaussian(0, 0.1);
    s.root_pos.z += rng.gaussian(0, 0.05);
    for (int j = 0; j < kNumJoints; ++j) s.q[j] += rng.gaussian(0, 0.05);
    const SimState prev = state_from_frame(clip, t - 1);
    JointArray<double> action = clip.frames[t].q;
    JointArray<double> prev_action = clip.frames[t - 1].q;
    JointArray<double> torques{};
    for (int j = 0; j < kNumJoints; ++j) torques[j] = rng.uniform(-100, 100);

    const RewardBreakdown r =
        total_reward(m, s, prev, action, prev_action, torques, clip, t, cfg);

    // Independent single-term recomputation.
    CHECK(r.root_pos == cfg.w_root_pos * segment_reward_global(s.root_pos, clip, t, cfg));
    const auto kb = forward_kinematics(m, s.root_pos, s.root_rot, s.q);
    const auto rel = to_root_frame(s.root_pos, s.root_rot, kb);
    std::array<Vec2, kNumKeybodies> pose;
    for (int k = 0; k < kNumKeybodies; ++k) pose[k] = rel.pos[k];
    CHECK(r.keybody_pos == cfg.w_keybody_pos * segment_reward_local(pose, clip, t, cfg));
    double over = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      const double soft = 0.9 * m.torque_limits[j];
      const double o = std::max(0.0, std::fabs(torques[j]) - soft) / m.torque_limits[j];
      over += o * o;
    }
    CHECK(r.torque_limits == doctest::Approx(cfg.w_torque_limits * over).epsilon(1e-12));

    // Total within tracking-weight bound; breakdown re-sums by construction.
    const double tracking_sum = r.root_pos + r.root_vel + r.root_rot + r.keybody_pos +
                                r.keybody_vel + r.keybody_rot;
    CHECK(tracking_sum <= 11.5 + 1e-12);
    CHECK(tracking_sum > 0.0);
  }
}

TEST_CASE("total reward is invariant under rigid translation") {
  const RobotModel m = RobotModel::standard();
  MotionClip clip = make_clip(m);
  RewardConfig cfg;
  Rng rng(13);

  const int t = 12;
  SimState s = state_from_frame(clip, t);
  s.root_pos.x += 0.07;
  s.q[kHipL] += 0.1;
  const SimState prev = state_from_frame(clip, t - 1);
  const RewardBreakdown base = total_reward(m, s, prev, s.q, prev.q,
                                            JointArray<double>{}, clip, t, cfg);

  // Shift the whole world (state and reference) by the same offset.
  const Vec2 shift{3.7, 0.0};
  MotionClip shifted = clip;
  for (auto& f : shifted.frames) f.root_pos += shift;
  shifted.derive(m);
  SimState s2 = s;
  s2.root_pos += shift;
  SimState prev2 = prev;
  prev2.root_pos += shift;
  const RewardBreakdown moved = total_reward(m, s2, prev2, s2.q, prev2.q,
                                             JointArray<double>{}, shifted, t, cfg);
  CHECK(std::fabs(base.total() - moved.total()) < 1e-12);
}

TEST_CASE("termination rules") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = make_clip(m, MotionKind::kStand, 1.0);
  RewardConfig cfg;

  // Final frame reached upright -> done.
  SimState s = state_from_frame(clip, clip.num_frames() - 1);
  CHECK(check_termination(m, s, clip, clip.num_frames() - 1, cfg) == Termination::kDone);

  // Low root -> fail.
  SimState low = s;
  low.root_pos.z = 0.1;
  CHECK(check_termination(m, low, clip, 5, cfg) == Termination::kFail);

  // Exactly at the height threshold -> continue (strict inequality); the
  // keybody rule is disabled for this probe so the rules stay isolated.
  RewardConfig loose = cfg;
  loose.term_keybody_error = 100.0;
  SimState edge = state_from_frame(clip, 5);
  edge.root_pos.z = cfg.term_root_height;
  CHECK(check_termination(m, edge, clip, 5, loose) == Termination::kContinue);

  // Keybody error exactly at its threshold -> continue: shift the whole pose
  // sideways by the threshold so every keybody is exactly that far off.
  SimState shifted = state_from_frame(clip, 5);
  shifted.root_pos.x += cfg.term_keybody_error;
  CHECK(check_termination(m, shifted, clip, 5, cfg) == Termination::kContinue);
  SimState beyond = shifted;
  beyond.root_pos.x += 1e-6;
  CHECK(check_termination(m, beyond, clip, 5, cfg) == Termination::kFail);

  // Mid-clip on reference -> continue.
  CHECK(check_termination(m, state_from_frame(clip, 5), clip, 5, cfg) ==
        Termination::kContinue);
}
