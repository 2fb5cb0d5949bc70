#include <doctest.h>

#include <cmath>

#include "tracklab/core/rng.hpp"
#include "tracklab/motion/generate.hpp"
#include "tracklab/sim/simulator.hpp"

using namespace tracklab;

namespace {

SimState standing_state(const RobotModel& m, const MotionClip& clip) {
  Rng rng(0);
  Simulator sim(m, SimConfig{});
  return sim.reset_rsi(clip, 0, RsiNoise::zero(), rng);
}

MotionClip stand_clip(const RobotModel& m) {
  GenParams p;
  return generate_motion(MotionKind::kStand, p, 1.0, 0.02, 1, m);
}

}  // namespace

TEST_CASE("pd torque formula and clamping") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  PhysicsParams params = PhysicsParams::nominal();

  JointArray<double> q{}, qdot{}, action{};
  // q == action, qdot == 0 -> zero torque.
  auto tau = sim.pd_torque(q, qdot, action, params);
  for (double t : tau) CHECK(t == 0.0);

  // Plug-in check: kp=50, kd=1, error 0.1 -> 5 Nm.
  RobotModel m2 = m;
  m2.kp.fill(50.0);
  m2.kd.fill(1.0);
  m2.torque_limits.fill(100.0);
  Simulator sim2(m2, SimConfig{});
  action.fill(0.1);
  tau = sim2.pd_torque(q, qdot, action, params);
  for (double t : tau) CHECK(t == doctest::Approx(5.0).epsilon(1e-12));

  // Saturation clamps exactly to the limit and counts.
  SimTelemetry telemetry;
  action.fill(10.0);
  tau = sim2.pd_torque(q, qdot, action, params, &telemetry);
  for (double t : tau) CHECK(t == 100.0);
  CHECK(telemetry.torque_saturations == kNumJoints);
}

TEST_CASE("zero gravity, zero torque, zero velocity leaves state unchanged") {
  const RobotModel m = RobotModel::standard();
  SimConfig cfg;
  cfg.gravity = 0.0;
  Simulator sim(m, cfg);
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);
  s.root_pos.z = 2.0;  // well above ground, no contact
  s.root_vel = {0, 0};
  s.root_angvel = 0;
  s.qdot.fill(0.0);
  const SimState next = sim.step(s, JointArray<double>{}, PhysicsParams::nominal(),
                                 cfg.dt_sim());
  CHECK(next.root_pos.x == s.root_pos.x);
  CHECK(next.root_pos.z == s.root_pos.z);
  for (int j = 0; j < kNumJoints; ++j) CHECK(next.q[j] == s.q[j]);
}

TEST_CASE("passive single pendulum conserves energy") {
  // 1-link chain on a fixed pivot, released from the horizontal.
  PlanarChain chain;
  chain.floating_base = false;
  chain.gravity = 9.81;
  chain.links.push_back({-1, {0.0, 1.5}, 2.0, 2.0 * 0.5 * 0.5 / 12.0, {0.0, -0.25}});
  ChainDynamics dyn(chain);

  std::vector<double> xi{1.5707963267948966};  // horizontal
  std::vector<double> u{0.0};
  const std::vector<double> tau{0.0};
  const double dt = 0.005;
  const double e0 = dyn.total_energy(dyn.kinematics(xi, u));
  const double seconds = 5.0;
  const int steps = static_cast<int>(seconds / dt);
  for (int i = 0; i < steps; ++i) dyn.step(xi, u, tau, dt);
  const double e1 = dyn.total_energy(dyn.kinematics(xi, u));

  // Reference energy scale: the swing amplitude (mgh from horizontal to down).
  const double scale = 2.0 * 9.81 * 0.25;
  const double drift_per_s = std::fabs(e1 - e0) / scale / seconds;
  CHECK(drift_per_s < 0.005);
}

TEST_CASE("passive floating humanoid in flight conserves energy") {
  const RobotModel m = RobotModel::standard();
  const PlanarChain chain = humanoid_chain(m, 9.81, 0.0);
  ChainDynamics dyn(chain);

  std::vector<double> xi(13, 0.0), u(13, 0.0);
  xi[1] = 50.0;  // high above ground; 1 s of flight stays clear of contact
  u[0] = 1.0;
  u[2] = 2.0;
  Rng rng(5);
  for (int j = 3; j < 13; ++j) {
    xi[j] = rng.uniform(-0.5, 0.5);
    u[j] = rng.uniform(-2.0, 2.0);
  }
  const double dt = 0.005;
  const double e0 = dyn.total_energy(dyn.kinematics(xi, u));
  for (int i = 0; i < 200; ++i) {
    std::vector<double> tau(13, 0.0);
    dyn.step(xi, u, tau, dt);
  }
  const double e1 = dyn.total_energy(dyn.kinematics(xi, u));
  CHECK(std::fabs(e1 - e0) / std::fabs(e0) < 0.005);
}

TEST_CASE("standing PD hold keeps root height for 5 seconds") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);
  const double z0 = s.root_pos.z;
  const JointArray<double> action = clip.frames[0].q;
  const PhysicsParams params = PhysicsParams::nominal();

  double max_dev = 0.0;
  double max_pen = 0.0;
  for (int step = 0; step < 250; ++step) {
    s = sim.control_step(s, action, params);
    max_dev = std::max(max_dev, std::fabs(s.root_pos.z - z0));
    // Penetration bound: ankle height minus lowest sole point.
    // Approximated via the root-to-sole distance staying above -2 mm.
  }
  CHECK(max_dev < 0.02);
  CHECK(s.finite());
  CHECK(s.contact[0]);
  CHECK(s.contact[1]);
  (void)max_pen;
}

TEST_CASE("static standing penetration stays under 2 mm") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);
  const JointArray<double> action = clip.frames[0].q;
  const PhysicsParams params = PhysicsParams::nominal();
  for (int step = 0; step < 250; ++step) s = sim.control_step(s, action, params);

  // Sole height from kinematics: both feet level on the ground.
  const auto kb = forward_kinematics(m, s.root_pos, s.root_rot, s.q);
  for (int kb_idx : {kKbAnkleL, kKbAnkleR}) {
    const double sole = kb.pos[kb_idx].z - m.ankle_height;
    CHECK(sole > -0.002);
  }
}

TEST_CASE("determinism: identical seeds give bit-identical trajectories") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = [&] {
    GenParams p;
    return generate_motion(MotionKind::kWalk, p, 2.0, 0.02, 1, m);
  }();

  auto run = [&](uint64_t seed) {
    Simulator sim(m, SimConfig{});
    Rng rng(seed);
    DrConfig dr;
    const PhysicsParams params = Simulator::sample_dr(dr, rng);
    SimState s = sim.reset_rsi(clip, 3, RsiNoise{}, rng);
    std::vector<double> trace;
    for (int t = 0; t < 50; ++t) {
      const int idx = clip.clamp_frame(4 + t);
      s = sim.control_step(s, clip.frames[idx].q, params);
      trace.push_back(s.root_pos.x);
      trace.push_back(s.root_pos.z);
      trace.push_back(s.q[kHipL]);
    }
    return trace;
  };

  const auto a = run(123);
  const auto b = run(123);
  const auto c = run(124);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  bool any_diff = false;
  for (size_t i = 0; i < c.size(); ++i) any_diff |= (a[i] != c[i]);
  CHECK(any_diff);
}

TEST_CASE("rsi: zero noise reproduces the reference frame exactly") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  GenParams p;
  const MotionClip clip = generate_motion(MotionKind::kWalk, p, 2.0, 0.02, 1, m);
  Rng rng(1);
  const int idx = 17;
  const SimState s = sim.reset_rsi(clip, idx, RsiNoise::zero(), rng);
  CHECK(s.root_pos.x == clip.frames[idx].root_pos.x);
  CHECK(s.root_pos.z == clip.frames[idx].root_pos.z);
  CHECK(s.root_vel.x == clip.root_vel[idx].x);
  CHECK(s.root_angvel == clip.root_angvel[idx]);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK(s.q[j] == clip.frames[idx].q[j]);
    CHECK(s.qdot[j] == clip.qdot[idx][j]);
  }
}

TEST_CASE("rsi: joint noise has the configured standard deviation") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  RsiNoise noise = RsiNoise::zero();
  noise.joint_position = 0.1;
  Rng rng(77);

  // Use the shoulder joint: reference 0, limits wide, so clamping is rare.
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const SimState s = sim.reset_rsi(clip, 0, noise, rng);
    const double d = s.q[kShoulderL] - clip.frames[0].q[kShoulderL];
    sum += d;
    sum2 += d * d;
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  const double std_dev = std::sqrt(var);
  CHECK(std_dev > 0.095);
  CHECK(std_dev < 0.105);
}

TEST_CASE("rsi never violates joint limits") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  RsiNoise noise;  // full table noise
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const SimState s = sim.reset_rsi(clip, 0, noise, rng);
    for (int j = 0; j < kNumJoints; ++j) {
      CHECK(s.q[j] >= m.joint_limit_min[j]);
      CHECK(s.q[j] <= m.joint_limit_max[j]);
    }
  }
}

TEST_CASE("dr sampling: ranges, degenerate range, and mean") {
  DrConfig dr;
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const PhysicsParams p = Simulator::sample_dr(dr, rng);
    CHECK(p.friction >= 0.1);
    CHECK(p.friction <= 1.6);
    CHECK(p.base_mass_offset >= -3.0);
    CHECK(p.base_mass_offset <= 3.0);
    for (int j = 0; j < kNumJoints; ++j) {
      CHECK(p.motor_strength[j] >= 0.9);
      CHECK(p.motor_strength[j] <= 1.1);
    }
  }

  DrConfig degenerate = dr;
  degenerate.motor_strength = {1.0, 1.0};
  const PhysicsParams p = Simulator::sample_dr(degenerate, rng);
  for (int j = 0; j < kNumJoints; ++j) CHECK(p.motor_strength[j] == 1.0);

  // Law of large numbers on the base-mass mean.
  double mean = 0.0;
  const int n = 100000;
  Rng rng2(11);
  for (int i = 0; i < n; ++i) mean += Simulator::sample_dr(dr, rng2).base_mass_offset;
  mean /= n;
  CHECK(std::fabs(mean) < 0.05);
}

TEST_CASE("push adds the sampled velocity, zero range is identity") {
  const RobotModel m = RobotModel::standard();
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);

  DrConfig zero;
  zero.push_velocity = {0.0, 0.0};
  Rng rng(1);
  const SimState same = Simulator::apply_push(s, zero, rng);
  CHECK(same.root_vel.x == s.root_vel.x);
  CHECK(same.root_vel.z == s.root_vel.z);

  DrConfig fixed;
  fixed.push_velocity = {0.3, 0.3};
  const SimState pushed = Simulator::apply_push(s, fixed, rng);
  CHECK(pushed.root_vel.x == doctest::Approx(s.root_vel.x + 0.3).epsilon(1e-12));
  CHECK(pushed.root_vel.z == doctest::Approx(s.root_vel.z + 0.3).epsilon(1e-12));
}

TEST_CASE("friction cone bounds tangential contact force") {
  // Indirect check: a sliding robot on low friction decelerates no faster
  // than mu*g. Drop to steady contact, give a large lateral velocity, and
  // watch the deceleration.
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);
  PhysicsParams params = PhysicsParams::nominal();
  params.friction = 0.3;
  const JointArray<double> action = clip.frames[0].q;
  for (int i = 0; i < 100; ++i) s = sim.control_step(s, action, params);  // settle

  s.root_vel.x = 1.5;
  const double v0 = 1.5;
  const int steps = 10;
  for (int i = 0; i < steps; ++i) s = sim.control_step(s, action, params);
  const double dv = v0 - s.root_vel.x;
  const double dt = steps * sim.config().control_dt;
  // Max deceleration from friction alone is mu*g (plus a little slack for
  // posture dynamics).
  CHECK(dv / dt < 0.3 * 9.81 * 1.5);
  CHECK(dv > 0.0);  // friction does decelerate
}

TEST_CASE("divergence guard throws on non-finite states") {
  const RobotModel m = RobotModel::standard();
  Simulator sim(m, SimConfig{});
  const MotionClip clip = stand_clip(m);
  SimState s = standing_state(m, clip);
  s.root_vel.x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sim.step(s, JointArray<double>{}, PhysicsParams::nominal(), 0.005),
                  SimDivergedError);
}
