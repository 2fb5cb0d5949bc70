#include "tracklab/motion/generate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "tracklab/core/rng.hpp"

namespace tracklab {

namespace {

constexpr double kPi = std::numbers::pi;

double smoothstep(double u) { return 0.5 * (1.0 - std::cos(kPi * std::clamp(u, 0.0, 1.0))); }

struct FrameSpec {
  Vec2 root_pos;
  double pitch = 0.0;
  JointArray<double> q{};
};

// One gait's pose as a pure function of time.
using PoseFn = std::function<FrameSpec(double)>;

void solve_legs(const RobotModel& model, FrameSpec& f, const Vec2& ankle_l_world,
                const Vec2& ankle_r_world) {
  const Rot2 rot = Rot2::from_angle(f.pitch);
  const Vec2 to_l = rot.inv_rotate(ankle_l_world - f.root_pos);
  const Vec2 to_r = rot.inv_rotate(ankle_r_world - f.root_pos);
  const LegIk left = leg_ik(model, to_l, f.pitch);
  const LegIk right = leg_ik(model, to_r, f.pitch);
  f.q[kHipL] = left.hip;
  f.q[kKneeL] = left.knee;
  f.q[kAnkleL] = left.ankle;
  f.q[kHipR] = right.hip;
  f.q[kKneeR] = right.knee;
  f.q[kAnkleR] = right.ankle;
}

// Whole-body COM x of a pose (world frame).
double pose_com_x(const RobotModel& m, const FrameSpec& f) {
  const auto& len = m.link_lengths;
  const auto& mass = m.link_masses;
  const Rot2 torso = Rot2::from_angle(f.pitch);
  const Vec2 root = f.root_pos;
  const Vec2 shoulder = root + torso.rotate({0.0, len[kTorso]});

  double mx = 0.0, mm = 0.0;
  auto add = [&](double mass_i, const Vec2& com) {
    mx += mass_i * com.x;
    mm += mass_i;
  };
  add(mass[kTorso], root + torso.rotate({0.0, 0.5 * len[kTorso]}));
  add(mass[kHead], root + torso.rotate({0.0, len[kTorso] + 0.5 * len[kHead]}));

  auto limb = [&](const Vec2& base, double a1, double a2, int l1, int l2) {
    const Rot2 r1 = Rot2::from_angle(f.pitch + a1);
    const Vec2 mid = base + r1.rotate({0.0, -len[l1]});
    add(mass[l1], base + r1.rotate({0.0, -0.5 * len[l1]}));
    const Rot2 r2 = Rot2::from_angle(f.pitch + a1 + a2);
    add(mass[l2], mid + r2.rotate({0.0, -0.5 * len[l2]}));
    return mid + r2.rotate({0.0, -len[l2]});
  };
  limb(shoulder, f.q[kShoulderL], f.q[kElbowL], kUpperArmL, kForearmL);
  limb(shoulder, f.q[kShoulderR], f.q[kElbowR], kUpperArmR, kForearmR);
  const Vec2 ankle_l = limb(root, f.q[kHipL], f.q[kKneeL], kThighL, kShankL);
  const Vec2 ankle_r = limb(root, f.q[kHipR], f.q[kKneeR], kThighR, kShankR);

  const Vec2 foot_com{0.5 * (m.toe_offset - m.heel_offset), -0.5 * m.ankle_height};
  const Rot2 foot_l = Rot2::from_angle(f.pitch + f.q[kHipL] + f.q[kKneeL] + f.q[kAnkleL]);
  const Rot2 foot_r = Rot2::from_angle(f.pitch + f.q[kHipR] + f.q[kKneeR] + f.q[kAnkleR]);
  add(mass[kFootL], ankle_l + foot_l.rotate(foot_com));
  add(mass[kFootR], ankle_r + foot_r.rotate(foot_com));
  return mx / mm;
}

// Shifts root x until the COM sits at com_target_x with the feet planted at
// the given world anchors; legs re-solved each iteration. Joints other than
// the legs must already be set on `f`.
void balance_root_x(const RobotModel& model, FrameSpec& f, const Vec2& ankle_l,
                    const Vec2& ankle_r, double com_target_x,
                    bool solve_left = true, bool solve_right = true) {
  for (int it = 0; it < 4; ++it) {
    FrameSpec trial = f;
    solve_legs(model, trial, ankle_l, ankle_r);
    if (!solve_left) {
      trial.q[kHipL] = f.q[kHipL];
      trial.q[kKneeL] = f.q[kKneeL];
      trial.q[kAnkleL] = f.q[kAnkleL];
    }
    if (!solve_right) {
      trial.q[kHipR] = f.q[kHipR];
      trial.q[kKneeR] = f.q[kKneeR];
      trial.q[kAnkleR] = f.q[kAnkleR];
    }
    const double com = pose_com_x(model, trial);
    f.q = trial.q;
    f.root_pos.x += com_target_x - com;
  }
  FrameSpec final_solve = f;
  solve_legs(model, final_solve, ankle_l, ankle_r);
  if (solve_left) {
    f.q[kHipL] = final_solve.q[kHipL];
    f.q[kKneeL] = final_solve.q[kKneeL];
    f.q[kAnkleL] = final_solve.q[kAnkleL];
  }
  if (solve_right) {
    f.q[kHipR] = final_solve.q[kHipR];
    f.q[kKneeR] = final_solve.q[kKneeR];
    f.q[kAnkleR] = final_solve.q[kAnkleR];
  }
}

PoseFn make_stand(const RobotModel& model, const GenParams& p) {
  return [&model, p](double) {
    FrameSpec f;
    f.root_pos = {0.0, p.stand_height};
    f.pitch = -0.03;
    balance_root_x(model, f, {0.0, model.ankle_height}, {0.0, model.ankle_height}, 0.02);
    return f;
  };
}

PoseFn make_walk(const RobotModel& model, const GenParams& p) {
  const double v = p.stride / p.period;
  const double height = p.stand_height - 0.03;
  const double swing_lift = 0.07;
  return [&model, p, v, height, swing_lift](double t) {
    FrameSpec f;
    f.root_pos = {v * t, height};
    f.pitch = -0.06;  // forward lean keeps momentum against PD lag

    const double T = p.period;
    auto ankle = [&](double phase_shift) -> Vec2 {
      // Stance during the first half of each shifted cycle, swing second half.
      const double tp = t + phase_shift;
      const double k = std::floor(tp / T);
      const double u = (tp - k * T) / T;  // [0,1) within cycle
      const double anchor = v * (k * T + 0.25 * T - phase_shift) - 0.04;
      if (u < 0.5) return {anchor, model.ankle_height};
      const double s = (u - 0.5) / 0.5;
      const double x = anchor + p.stride * smoothstep(s);
      const double sz = std::sin(kPi * s);
      return {x, model.ankle_height + swing_lift * sz * sz};
    };
    const Vec2 ankle_l = ankle(0.0);
    const Vec2 ankle_r = ankle(0.5 * T);
    solve_legs(model, f, ankle_l, ankle_r);

    // Arms swing against the same-side leg.
    const double arm = 0.25 * std::sin(2.0 * kPi * t / T);
    f.q[kShoulderL] = arm;
    f.q[kShoulderR] = -arm;
    f.q[kElbowL] = 0.25;
    f.q[kElbowR] = 0.25;
    return f;
  };
}

PoseFn make_squat(const RobotModel& model, const GenParams& p) {
  return [&model, p](double t) {
    const double cycle = 0.5 * (1.0 - std::cos(2.0 * kPi * t / p.squat_period));
    const double depth = p.squat_depth * cycle;
    FrameSpec f;
    f.root_pos = {0.0, p.stand_height - depth};
    f.pitch = -0.03 - 0.06 * cycle;  // torso leans into the squat
    const double reach = 0.5 * cycle;  // arms reach forward for balance
    f.q[kShoulderL] = reach;
    f.q[kShoulderR] = reach;
    f.q[kElbowL] = 0.15;
    f.q[kElbowR] = 0.15;
    // Root x solved so the COM stays over the feet through the whole cycle.
    balance_root_x(model, f, {0.0, model.ankle_height}, {0.0, model.ankle_height}, 0.02);
    return f;
  };
}

PoseFn make_kick(const RobotModel& model, const GenParams& p) {
  // One kick cycle: wind-up, strike, retract; stance leg stays planted.
  const double T = std::max(p.period, 1.6);
  return [&model, p, T](double t) {
    FrameSpec f;
    f.root_pos = {0.0, p.stand_height - 0.02};
    const double u = std::fmod(t, T) / T;
    const double a = p.amplitude;

    // Phase envelopes for the kicking leg, as deltas from the stance pose.
    double hip_d = 0.0, knee_d = 0.0, lean = -0.03, air = 0.0;
    if (u < 0.25) {          // wind up: leg back, knee folds
      const double s = smoothstep(u / 0.25);
      hip_d = -0.5 * a * s;
      knee_d = -0.9 * a * s;
      lean = -0.03 - 0.05 * s;
      air = smoothstep(std::min(u / 0.12, 1.0));
    } else if (u < 0.55) {   // strike: hip forward, knee extends
      const double s = smoothstep((u - 0.25) / 0.3);
      hip_d = -0.5 * a + 1.4 * a * s;
      knee_d = -0.9 * a * (1.0 - s) + 0.35 * s;
      lean = -0.08 + 0.02 * s;
      air = 1.0;
    } else if (u < 0.9) {    // retract, knee refolds on the way back
      const double s = smoothstep((u - 0.55) / 0.35);
      hip_d = 0.9 * a * (1.0 - s);
      knee_d = 0.35 * (1.0 - s) - 0.9 * a * s * (1.0 - s);
      lean = -0.06 + 0.03 * s;
      air = 1.0 - smoothstep(std::max(0.0, (u - 0.82) / 0.08));
    }

    f.pitch = lean;
    // Arms counterbalance the kick.
    f.q[kShoulderL] = 0.5 * hip_d;
    f.q[kShoulderR] = -0.4 * hip_d;
    f.q[kElbowL] = 0.2;
    f.q[kElbowR] = 0.2;

    // Balance over the stance foot with both legs planted, then swing the
    // kicking leg away from that solution.
    const Vec2 anchor{-0.02, model.ankle_height};
    balance_root_x(model, f, anchor, anchor, anchor.x + 0.03);
    f.q[kHipR] += hip_d;
    f.q[kKneeR] = std::clamp(f.q[kKneeR] + knee_d, model.joint_limit_min[kKneeR],
                             model.joint_limit_max[kKneeR]);
    // Foot level while planted, slightly plantarflexed while airborne.
    f.q[kAnkleR] = (1.0 - air) * f.q[kAnkleR] + air * -0.2;
    return f;
  };
}

PoseFn make_wave(const RobotModel& model, const GenParams& p) {
  return [&model, p](double t) {
    FrameSpec f;
    f.root_pos = {0.0, p.stand_height};
    f.pitch = -0.03;
    const double raise = smoothstep(t / 0.8);  // raise the arm over 0.8 s
    f.q[kShoulderR] = 2.1 * p.amplitude * raise;
    f.q[kElbowR] = raise * (0.4 + 0.35 * p.amplitude * std::sin(2.0 * kPi * 1.5 * t));
    f.q[kShoulderL] = 0.0;
    f.q[kElbowL] = 0.1;
    balance_root_x(model, f, {0.0, model.ankle_height}, {0.0, model.ankle_height}, 0.02);
    return f;
  };
}

PoseFn make_pose_fn(MotionKind kind, const RobotModel& model, const GenParams& p);

PoseFn make_composite(const RobotModel& model, const GenParams& p, double duration,
                      uint64_t seed) {
  // Seeded segment sequence over the base kinds, crossfaded at boundaries.
  static constexpr MotionKind kChoices[] = {MotionKind::kWalk, MotionKind::kSquat,
                                            MotionKind::kKick, MotionKind::kWave};
  Rng rng(Rng::derive_seed(seed, 0xC0));
  struct Segment {
    double start;
    PoseFn fn;
    double root_x_offset;
  };
  auto segments = std::make_shared<std::vector<Segment>>();
  double t = 0.0;
  double x_offset = 0.0;
  while (t < duration) {
    const MotionKind kind = kChoices[rng.uniform_index(4)];
    const double len = rng.uniform(2.0, 4.0);
    PoseFn fn = make_pose_fn(kind, model, p);
    segments->push_back({t, fn, x_offset});
    // Carry root-x continuity into the next segment.
    const double seg_end_x = fn(len).root_pos.x;
    x_offset += seg_end_x - fn(0.0).root_pos.x;
    t += len;
  }

  const double blend = 0.6;
  return [segments, blend](double t2) {
    int idx = 0;
    for (size_t i = 0; i < segments->size(); ++i) {
      if (t2 >= (*segments)[i].start) idx = static_cast<int>(i);
    }
    const Segment& seg = (*segments)[idx];
    FrameSpec f = seg.fn(t2 - seg.start);
    f.root_pos.x += seg.root_x_offset;
    if (idx > 0 && t2 - seg.start < blend) {
      const Segment& prev = (*segments)[idx - 1];
      FrameSpec g = prev.fn(t2 - prev.start);
      g.root_pos.x += prev.root_x_offset;
      const double w = smoothstep((t2 - seg.start) / blend);
      f.root_pos = g.root_pos * (1.0 - w) + f.root_pos * w;
      f.pitch = (1.0 - w) * g.pitch + w * f.pitch;
      for (int j = 0; j < kNumJoints; ++j) f.q[j] = (1.0 - w) * g.q[j] + w * f.q[j];
    }
    return f;
  };
}

PoseFn make_pose_fn(MotionKind kind, const RobotModel& model, const GenParams& p) {
  switch (kind) {
    case MotionKind::kStand: return make_stand(model, p);
    case MotionKind::kWalk: return make_walk(model, p);
    case MotionKind::kSquat: return make_squat(model, p);
    case MotionKind::kKick: return make_kick(model, p);
    case MotionKind::kWave: return make_wave(model, p);
    default: throw std::invalid_argument("composite handled separately");
  }
}

}  // namespace

MotionKind parse_motion_kind(const std::string& name) {
  if (name == "stand") return MotionKind::kStand;
  if (name == "walk") return MotionKind::kWalk;
  if (name == "squat") return MotionKind::kSquat;
  if (name == "kick") return MotionKind::kKick;
  if (name == "wave") return MotionKind::kWave;
  if (name == "composite") return MotionKind::kComposite;
  throw std::invalid_argument("unknown motion kind '" + name + "'");
}

std::string motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kStand: return "stand";
    case MotionKind::kWalk: return "walk";
    case MotionKind::kSquat: return "squat";
    case MotionKind::kKick: return "kick";
    case MotionKind::kWave: return "wave";
    case MotionKind::kComposite: return "composite";
  }
  return "?";
}

void GenParams::validate() const {
  if (!(stride >= 0.0 && stride <= 12.0)) throw std::invalid_argument("stride out of range");
  if (!(period >= 0.3 && period <= 10.0)) throw std::invalid_argument("period out of range");
  if (!(squat_depth >= 0.0 && squat_depth <= 0.45)) {
    throw std::invalid_argument("squat_depth out of range");
  }
  if (!(squat_period >= 0.5 && squat_period <= 10.0)) {
    throw std::invalid_argument("squat_period out of range");
  }
  if (!(amplitude >= 0.0 && amplitude <= 2.0)) {
    throw std::invalid_argument("amplitude out of range");
  }
  if (!(stand_height > 0.3 && stand_height < 1.2)) {
    throw std::invalid_argument("stand_height out of range");
  }
  if (!(max_joint_speed > 0.0)) throw std::invalid_argument("max_joint_speed out of range");
}

LegIk leg_ik(const RobotModel& model, const Vec2& hip_to_ankle, double torso_pitch) {
  const double l1 = model.link_lengths[kThighL];
  const double l2 = model.link_lengths[kShankL];
  double r = hip_to_ankle.norm();
  r = std::clamp(r, std::fabs(l1 - l2) + 1e-4, l1 + l2 - 1e-4);

  // Angle of the target measured CCW from straight down.
  const double beta = std::atan2(hip_to_ankle.x, -hip_to_ankle.z);
  const double cos_interior = std::clamp(
      (l1 * l1 + l2 * l2 - r * r) / (2.0 * l1 * l2), -1.0, 1.0);
  const double interior = std::acos(cos_interior);  // pi = straight leg
  const double cos_hip = std::clamp((l1 * l1 + r * r - l2 * l2) / (2.0 * l1 * r), -1.0, 1.0);

  LegIk ik;
  ik.knee = -(kPi - interior);           // knee folds backward
  ik.hip = beta + std::acos(cos_hip);    // thigh leads the hip-ankle line
  ik.ankle = -torso_pitch - ik.hip - ik.knee;  // keep the sole level
  return ik;
}

MotionClip generate_motion(MotionKind kind, const GenParams& params, double duration,
                           double dt, uint64_t seed, const RobotModel& model) {
  params.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");

  PoseFn pose = (kind == MotionKind::kComposite)
                    ? make_composite(model, params, duration, seed)
                    : make_pose_fn(kind, model, params);

  MotionClip clip;
  clip.dt = dt;
  clip.name = motion_kind_name(kind);
  const int n = std::max(2, static_cast<int>(std::llround(duration / dt)) + 1);
  clip.frames.reserve(n);
  for (int i = 0; i < n; ++i) {
    const FrameSpec spec = pose(i * dt);
    MotionFrame f;
    f.root_pos = spec.root_pos;
    f.root_rot = Rot2::from_angle(spec.pitch);
    f.q = spec.q;
    for (int j = 0; j < kNumJoints; ++j) f.q[j] = model.clamp_joint(j, f.q[j]);
    clip.frames.push_back(f);
  }
  clip.derive(model);

  double max_speed = 0.0;
  for (const auto& qd : clip.qdot) {
    for (double v : qd) max_speed = std::max(max_speed, std::fabs(v));
  }
  if (max_speed > params.max_joint_speed) {
    throw std::invalid_argument("generated motion exceeds max joint speed (" +
                                std::to_string(max_speed) + " rad/s)");
  }
  return clip;
}

}  // namespace tracklab
