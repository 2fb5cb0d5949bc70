#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tracklab/core/rng.hpp"
#include "tracklab/motion/clip_io.hpp"
#include "tracklab/motion/curate.hpp"
#include "tracklab/motion/fk.hpp"
#include "tracklab/motion/generate.hpp"

using namespace tracklab;

namespace {

// Independent FK oracle: explicit 2x2 rotation-matrix composition per joint.
struct Mat2 {
  double a, b, c, d;  // [[a b],[c d]]
  Vec2 apply(const Vec2& v) const { return {a * v.x + b * v.z, c * v.x + d * v.z}; }
  Mat2 mul(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
};

Mat2 rot_mat(double t) { return {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)}; }

KeybodyPose fk_oracle(const RobotModel& m, const Vec2& root, double theta,
                      const JointArray<double>& q) {
  KeybodyPose out;
  const auto& len = m.link_lengths;
  const Mat2 torso = rot_mat(theta);
  const Vec2 shoulder = root + torso.apply({0.0, len[kTorso]});
  out.pos[kKbHead] = root + torso.apply({0.0, len[kTorso] + len[kHead]});

  auto arm = [&](int sj, int ej, int kb_e, int kb_h, int ua, int fa) {
    const Mat2 upper = torso.mul(rot_mat(q[sj]));
    const Vec2 elbow = shoulder + upper.apply({0.0, -len[ua]});
    const Mat2 fore = upper.mul(rot_mat(q[ej]));
    out.pos[kb_e] = elbow;
    out.pos[kb_h] = elbow + fore.apply({0.0, -len[fa]});
  };
  arm(kShoulderL, kElbowL, kKbElbowL, kKbHandL, kUpperArmL, kForearmL);
  arm(kShoulderR, kElbowR, kKbElbowR, kKbHandR, kUpperArmR, kForearmR);

  auto leg = [&](int hj, int kj, int kb_k, int kb_a, int th, int sh) {
    const Mat2 thigh = torso.mul(rot_mat(q[hj]));
    const Vec2 knee = root + thigh.apply({0.0, -len[th]});
    const Mat2 shank = thigh.mul(rot_mat(q[kj]));
    out.pos[kb_k] = knee;
    out.pos[kb_a] = knee + shank.apply({0.0, -len[sh]});
  };
  leg(kHipL, kKneeL, kKbKneeL, kKbAnkleL, kThighL, kShankL);
  leg(kHipR, kKneeR, kKbKneeR, kKbAnkleR, kThighR, kShankR);
  return out;
}

JointArray<double> random_q(const RobotModel& m, Rng& rng) {
  JointArray<double> q;
  for (int j = 0; j < kNumJoints; ++j) {
    q[j] = rng.uniform(m.joint_limit_min[j], m.joint_limit_max[j]);
  }
  return q;
}

}  // namespace

TEST_CASE("fk zero pose puts keybodies at rest offsets") {
  const RobotModel m = RobotModel::standard();
  JointArray<double> q{};
  const auto kb = forward_kinematics(m, {0.0, 0.0}, Rot2{}, q);
  const auto& len = m.link_lengths;
  CHECK(kb.pos[kKbHead].x == doctest::Approx(0.0));
  CHECK(kb.pos[kKbHead].z == doctest::Approx(len[kTorso] + len[kHead]));
  CHECK(kb.pos[kKbHandL].z == doctest::Approx(len[kTorso] - len[kUpperArmL] - len[kForearmL]));
  CHECK(kb.pos[kKbElbowR].z == doctest::Approx(len[kTorso] - len[kUpperArmR]));
  CHECK(kb.pos[kKbKneeL].z == doctest::Approx(-len[kThighL]));
  CHECK(kb.pos[kKbAnkleR].z == doctest::Approx(-len[kThighR] - len[kShankR]));
}

TEST_CASE("fk is equivariant under root translation") {
  const RobotModel m = RobotModel::standard();
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto q = random_q(m, rng);
    const auto base = forward_kinematics(m, {0.0, 0.9}, Rot2{}, q);
    const auto moved = forward_kinematics(m, {1.0, 0.9}, Rot2{}, q);
    for (int k = 0; k < kNumKeybodies; ++k) {
      CHECK(moved.pos[k].x - base.pos[k].x == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(moved.pos[k].z - base.pos[k].z == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("fk matches the rotation-matrix composition oracle") {
  const RobotModel m = RobotModel::standard();
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_q(m, rng);
    const Vec2 root{rng.uniform(-2, 2), rng.uniform(0.2, 1.5)};
    const double theta = rng.uniform(-1.5, 1.5);
    const auto got = forward_kinematics(m, root, Rot2::from_angle(theta), q);
    const auto want = fk_oracle(m, root, theta, q);
    for (int k = 0; k < kNumKeybodies; ++k) {
      CHECK(std::fabs(got.pos[k].x - want.pos[k].x) < 1e-10);
      CHECK(std::fabs(got.pos[k].z - want.pos[k].z) < 1e-10);
    }
  }
}

TEST_CASE("fk rejects non-unit rotation") {
  const RobotModel m = RobotModel::standard();
  JointArray<double> q{};
  CHECK_THROWS_WITH_AS(forward_kinematics(m, {0, 0}, Rot2{1.1, 0.0}, q),
                       "invalid rotation", std::invalid_argument);
}

TEST_CASE("to_root_frame basics and round-trip") {
  const RobotModel m = RobotModel::standard();
  Rng rng(3);
  JointArray<double> q{};
  const Vec2 root{0.4, 0.9};

  // Identity rotation: relative position is world minus root.
  auto kb = forward_kinematics(m, root, Rot2{}, q);
  auto rel = to_root_frame(root, Rot2{}, kb);
  for (int k = 0; k < kNumKeybodies; ++k) {
    CHECK(rel.pos[k].x == doctest::Approx(kb.pos[k].x - root.x).epsilon(1e-12));
    CHECK(rel.pos[k].z == doctest::Approx(kb.pos[k].z - root.z).epsilon(1e-12));
  }

  // Keybody exactly at the root maps to (0,0).
  KeybodyPose at_root = kb;
  at_root.pos[0] = root;
  rel = to_root_frame(root, Rot2::from_angle(0.7), at_root);
  CHECK(std::fabs(rel.pos[0].x) < 1e-12);
  CHECK(std::fabs(rel.pos[0].z) < 1e-12);

  // Random pose round trip.
  for (int i = 0; i < 30; ++i) {
    const auto qq = random_q(m, rng);
    const Vec2 r{rng.uniform(-3, 3), rng.uniform(0.1, 2.0)};
    const Rot2 rot = Rot2::from_angle(rng.uniform(-3, 3));
    const auto world = forward_kinematics(m, r, rot, qq);
    const auto back = from_root_frame(r, rot, to_root_frame(r, rot, world));
    for (int k = 0; k < kNumKeybodies; ++k) {
      CHECK(std::fabs(back.pos[k].x - world.pos[k].x) < 1e-9);
      CHECK(std::fabs(back.pos[k].z - world.pos[k].z) < 1e-9);
      CHECK(std::fabs(back.rot[k].c - world.rot[k].c) < 1e-9);
      CHECK(std::fabs(back.rot[k].s - world.rot[k].s) < 1e-9);
    }
  }
}

TEST_CASE("clip derives zero velocities for identical frames") {
  const RobotModel m = RobotModel::standard();
  MotionClip clip;
  clip.dt = 0.02;
  MotionFrame f;
  f.root_pos = {0.0, 0.9};
  clip.frames = {f, f};
  clip.derive(m);
  CHECK(clip.root_vel[0].x == 0.0);
  CHECK(clip.root_vel[1].z == 0.0);
  CHECK(clip.root_angvel[0] == 0.0);
  for (int j = 0; j < kNumJoints; ++j) CHECK(clip.qdot[0][j] == 0.0);
}

TEST_CASE("clip finite differences recover uniform velocity exactly") {
  const RobotModel m = RobotModel::standard();
  MotionClip clip;
  clip.dt = 0.02;
  for (int i = 0; i < 10; ++i) {
    MotionFrame f;
    f.root_pos = {0.02 * i, 0.9};
    clip.frames.push_back(f);
  }
  clip.derive(m);
  for (int t = 0; t < clip.num_frames(); ++t) {
    CHECK(clip.root_vel[t].x == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("clip save/load round-trips bit-exact") {
  const RobotModel m = RobotModel::standard();
  Rng rng(23);
  MotionClip clip;
  clip.dt = 0.02;
  for (int i = 0; i < 17; ++i) {
    MotionFrame f;
    f.root_pos = {rng.uniform(-2, 2), rng.uniform(0.3, 1.2)};
    f.root_rot = Rot2::from_angle(rng.uniform(-0.5, 0.5));
    for (int j = 0; j < kNumJoints; ++j) {
      f.q[j] = rng.uniform(m.joint_limit_min[j], m.joint_limit_max[j]);
    }
    clip.frames.push_back(f);
  }
  clip.derive(m);

  const std::string path = (std::filesystem::temp_directory_path() / "clip_rt.json").string();
  save_clip(clip, path);
  const MotionClip loaded = load_clip(path, m);
  REQUIRE(loaded.num_frames() == clip.num_frames());
  CHECK(loaded.dt == clip.dt);
  for (int i = 0; i < clip.num_frames(); ++i) {
    CHECK(loaded.frames[i].root_pos.x == clip.frames[i].root_pos.x);
    CHECK(loaded.frames[i].root_pos.z == clip.frames[i].root_pos.z);
    CHECK(loaded.frames[i].root_rot.c == clip.frames[i].root_rot.c);
    CHECK(loaded.frames[i].root_rot.s == clip.frames[i].root_rot.s);
    for (int j = 0; j < kNumJoints; ++j) CHECK(loaded.frames[i].q[j] == clip.frames[i].q[j]);
  }
  std::remove(path.c_str());
}

TEST_CASE("clip loader rejects malformed files") {
  const RobotModel m = RobotModel::standard();
  const auto tmp = std::filesystem::temp_directory_path();

  auto write = [&](const std::string& name, const std::string& text) {
    const std::string p = (tmp / name).string();
    FILE* f = std::fopen(p.c_str(), "w");
    std::fputs(text.c_str(), f);
    std::fclose(f);
    return p;
  };

  const std::string bad_version = write("clip_v9.json", R"({"version":9,"dt":0.02,
    "joint_names":["shoulder_l","elbow_l","shoulder_r","elbow_r","hip_l","knee_l","ankle_l","hip_r","knee_r","ankle_r"],
    "frames":[]})");
  CHECK_THROWS_AS(load_clip(bad_version, m), std::runtime_error);

  const std::string bad_q = write("clip_badq.json", R"({"version":1,"dt":0.02,
    "joint_names":["shoulder_l","elbow_l","shoulder_r","elbow_r","hip_l","knee_l","ankle_l","hip_r","knee_r","ankle_r"],
    "frames":[{"root_pos":[0,0.9],"root_rot":[1,0],"q":[0,0,0]}]})");
  CHECK_THROWS_AS(load_clip(bad_q, m), std::runtime_error);

  const std::string not_json = write("clip_nj.json", "not json at all");
  CHECK_THROWS_AS(load_clip(not_json, m), std::runtime_error);
}

TEST_CASE("generate stand: identical frames, zero velocity") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  const MotionClip clip = generate_motion(MotionKind::kStand, p, 1.0, 0.02, 1, m);
  for (int t = 1; t < clip.num_frames(); ++t) {
    CHECK(clip.frames[t].root_pos.x == clip.frames[0].root_pos.x);
    CHECK(clip.frames[t].root_pos.z == clip.frames[0].root_pos.z);
    for (int j = 0; j < kNumJoints; ++j) CHECK(clip.frames[t].q[j] == clip.frames[0].q[j]);
    CHECK(clip.root_vel[t].x == 0.0);
  }
}

TEST_CASE("generate walk: mean forward speed equals stride/period") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  p.stride = 0.4;
  p.period = 1.0;
  const MotionClip clip = generate_motion(MotionKind::kWalk, p, 4.0, 0.02, 1, m);
  double mean_vx = 0.0;
  for (int t = 0; t < clip.num_frames(); ++t) mean_vx += clip.root_vel[t].x;
  mean_vx /= clip.num_frames();
  CHECK(mean_vx == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("generate squat: min root height is stand height minus depth") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  p.squat_depth = 0.3;
  const MotionClip clip = generate_motion(MotionKind::kSquat, p, 2.0, 0.02, 1, m);
  double min_z = 1e9;
  for (const auto& f : clip.frames) min_z = std::min(min_z, f.root_pos.z);
  CHECK(min_z == doctest::Approx(p.stand_height - 0.3).epsilon(1e-9));
}

TEST_CASE("generate respects joint limits and smoothness bound") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  for (auto kind : {MotionKind::kWalk, MotionKind::kSquat, MotionKind::kKick,
                    MotionKind::kWave, MotionKind::kComposite}) {
    const MotionClip clip = generate_motion(kind, p, 5.0, 0.02, 42, m);
    for (const auto& f : clip.frames) {
      for (int j = 0; j < kNumJoints; ++j) {
        CHECK(f.q[j] >= m.joint_limit_min[j] - 1e-12);
        CHECK(f.q[j] <= m.joint_limit_max[j] + 1e-12);
      }
    }
    for (const auto& qd : clip.qdot) {
      for (double v : qd) CHECK(std::fabs(v) <= p.max_joint_speed);
    }
  }
}

TEST_CASE("generate is deterministic per seed") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  const MotionClip a = generate_motion(MotionKind::kComposite, p, 6.0, 0.02, 9, m);
  const MotionClip b = generate_motion(MotionKind::kComposite, p, 6.0, 0.02, 9, m);
  REQUIRE(a.num_frames() == b.num_frames());
  for (int t = 0; t < a.num_frames(); ++t) {
    CHECK(a.frames[t].root_pos.x == b.frames[t].root_pos.x);
    for (int j = 0; j < kNumJoints; ++j) CHECK(a.frames[t].q[j] == b.frames[t].q[j]);
  }
}

TEST_CASE("generate rejects unknown kind and bad params") {
  CHECK_THROWS_AS(parse_motion_kind("moonwalk"), std::invalid_argument);
  const RobotModel m = RobotModel::standard();
  GenParams p;
  p.squat_depth = 2.0;
  CHECK_THROWS_AS(generate_motion(MotionKind::kSquat, p, 1.0, 0.02, 1, m),
                  std::invalid_argument);
  GenParams p2;
  CHECK_THROWS_AS(generate_motion(MotionKind::kWalk, p2, -1.0, 0.02, 1, m),
                  std::invalid_argument);
}

TEST_CASE("curation keeps clips by success threshold") {
  const RobotModel m = RobotModel::standard();
  GenParams p;
  std::vector<MotionClip> clips;
  clips.push_back(generate_motion(MotionKind::kStand, p, 1.0, 0.02, 1, m));
  clips.push_back(generate_motion(MotionKind::kWalk, p, 1.0, 0.02, 1, m));

  // Synthetic runner: clip 0 always succeeds, clip 1 always fails.
  TrialRunner runner = [&](const MotionClip& c, int) {
    TrialResult r;
    r.success = (c.name == "stand");
    r.mpkpe_mm = r.success ? 10.0 : 400.0;
    return r;
  };

  auto result = curate_dataset(runner, clips, 4, 0.5);
  REQUIRE(result.kept_indices.size() == 1);
  CHECK(result.kept_indices[0] == 0);
  CHECK(result.reports[0].success_rate == 1.0);
  CHECK(result.reports[1].success_rate == 0.0);

  // Threshold 0 keeps everything.
  auto all = curate_dataset(runner, clips, 4, 0.0);
  CHECK(all.kept_indices.size() == clips.size());

  CHECK_THROWS_AS(curate_dataset(runner, {}, 4, 0.5), std::invalid_argument);
}
