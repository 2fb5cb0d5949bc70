#include "tracklab/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tracklab {

bool SimState::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  if (!ok(root_pos.x) || !ok(root_pos.z) || !ok(root_rot.c) || !ok(root_rot.s) ||
      !ok(root_vel.x) || !ok(root_vel.z) || !ok(root_angvel) || !ok(time)) {
    return false;
  }
  for (int j = 0; j < kNumJoints; ++j) {
    if (!ok(q[j]) || !ok(qdot[j])) return false;
  }
  return true;
}

PhysicsParams PhysicsParams::nominal() {
  PhysicsParams p;
  p.motor_strength.fill(1.0);
  p.default_joint_offset.fill(0.0);
  return p;
}

void DrConfig::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!(r.min <= r.max)) {
      throw std::invalid_argument(std::string("dr range min > max: ") + name);
    }
  };
  check(base_mass, "base_mass");
  check(friction, "friction");
  check(motor_strength, "motor_strength");
  check(default_joint_pos, "default_joint_pos");
  check(push_velocity, "push_velocity");
  if (!(friction.min > 0.0)) throw std::invalid_argument("friction must be > 0");
  if (!(motor_strength.min > 0.0)) throw std::invalid_argument("motor_strength must be > 0");
  if (!(push_interval > 0.0)) throw std::invalid_argument("push_interval must be > 0");
}

RsiNoise RsiNoise::zero() {
  RsiNoise n;
  n.joint_position = n.root_position = n.root_velocity = 0.0;
  n.root_rotation = n.root_angular_vel = 0.0;
  return n;
}

void RsiNoise::validate() const {
  if (joint_position < 0 || root_position < 0 || root_velocity < 0 ||
      root_rotation < 0 || root_angular_vel < 0) {
    throw std::invalid_argument("rsi noise scales must be >= 0");
  }
}

PlanarChain humanoid_chain(const RobotModel& model, double gravity,
                           double base_mass_offset) {
  const auto& len = model.link_lengths;
  const auto& mass = model.link_masses;
  const auto& inertia = model.link_inertias;

  PlanarChain chain;
  chain.floating_base = true;
  chain.gravity = gravity;
  chain.links.resize(11);

  // Torso with the head welded on and the DR payload at the torso COM.
  {
    const double mt = mass[kTorso] + base_mass_offset;
    const double mh = mass[kHead];
    const double mc = mt + mh;
    if (!(mc > 0.5)) throw std::invalid_argument("base mass offset leaves torso too light");
    const Vec2 com_t{0.0, 0.5 * len[kTorso]};
    const Vec2 com_h{0.0, len[kTorso] + 0.5 * len[kHead]};
    const Vec2 com{(mt * com_t.x + mh * com_h.x) / mc, (mt * com_t.z + mh * com_h.z) / mc};
    const double it = inertia[kTorso] + mt * (com_t - com).norm2();
    const double ih = inertia[kHead] + mh * (com_h - com).norm2();
    chain.links[0] = {-1, {0.0, 0.0}, mc, it + ih, com};
  }

  const Vec2 shoulder{0.0, len[kTorso]};
  auto rod = [&](int parent, Vec2 anchor, int link_id) {
    return ChainLink{parent, anchor, mass[link_id], inertia[link_id],
                     {0.0, -0.5 * len[link_id]}};
  };
  chain.links[1] = rod(0, shoulder, kUpperArmL);
  chain.links[2] = rod(1, {0.0, -len[kUpperArmL]}, kForearmL);
  chain.links[3] = rod(0, shoulder, kUpperArmR);
  chain.links[4] = rod(3, {0.0, -len[kUpperArmR]}, kForearmR);
  chain.links[5] = rod(0, {0.0, 0.0}, kThighL);
  chain.links[6] = rod(5, {0.0, -len[kThighL]}, kShankL);
  chain.links[7] = ChainLink{6,
                             {0.0, -len[kShankL]},
                             mass[kFootL],
                             inertia[kFootL],
                             {0.5 * (model.toe_offset - model.heel_offset),
                              -0.5 * model.ankle_height}};
  chain.links[8] = rod(0, {0.0, 0.0}, kThighR);
  chain.links[9] = rod(8, {0.0, -len[kThighR]}, kShankR);
  chain.links[10] = ChainLink{9,
                              {0.0, -len[kShankR]},
                              mass[kFootR],
                              inertia[kFootR],
                              {0.5 * (model.toe_offset - model.heel_offset),
                               -0.5 * model.ankle_height}};
  return chain;
}

namespace {
// Chain link carrying each joint: JointId j sits on chain link j+1.
constexpr int kFootLinkL = 7;
constexpr int kFootLinkR = 10;
}  // namespace

Simulator::Simulator(const RobotModel& model, const SimConfig& config)
    : model_(model), config_(config), cached_mass_offset_(0.0) {
  model_.validate();
  cached_dynamics_ = std::make_unique<ChainDynamics>(
      humanoid_chain(model_, config_.gravity, 0.0));
}

const ChainDynamics& Simulator::chain_for(const PhysicsParams& params) const {
  if (params.base_mass_offset != cached_mass_offset_) {
    cached_dynamics_ = std::make_unique<ChainDynamics>(
        humanoid_chain(model_, config_.gravity, params.base_mass_offset));
    cached_mass_offset_ = params.base_mass_offset;
  }
  return *cached_dynamics_;
}

JointArray<double> Simulator::pd_torque(const JointArray<double>& q,
                                        const JointArray<double>& qdot,
                                        const JointArray<double>& action,
                                        const PhysicsParams& params,
                                        SimTelemetry* telemetry) const {
  JointArray<double> tau;
  for (int j = 0; j < kNumJoints; ++j) {
    const double raw = params.motor_strength[j] *
                       (model_.kp[j] * (action[j] - q[j]) - model_.kd[j] * qdot[j]);
    const double lim = model_.torque_limits[j];
    tau[j] = std::clamp(raw, -lim, lim);
    if (telemetry && tau[j] != raw) ++telemetry->torque_saturations;
  }
  return tau;
}

void Simulator::to_generalized(const SimState& state, std::vector<double>& xi,
                               std::vector<double>& u) const {
  xi.assign(13, 0.0);
  u.assign(13, 0.0);
  xi[0] = state.root_pos.x;
  xi[1] = state.root_pos.z;
  xi[2] = state.root_rot.angle();
  u[0] = state.root_vel.x;
  u[1] = state.root_vel.z;
  u[2] = state.root_angvel;
  for (int j = 0; j < kNumJoints; ++j) {
    xi[3 + j] = state.q[j];
    u[3 + j] = state.qdot[j];
  }
}

void Simulator::from_generalized(const std::vector<double>& xi,
                                 const std::vector<double>& u, SimState& state) const {
  state.root_pos = {xi[0], xi[1]};
  state.root_rot = Rot2::from_angle(xi[2]);
  state.root_vel = {u[0], u[1]};
  state.root_angvel = u[2];
  for (int j = 0; j < kNumJoints; ++j) {
    state.q[j] = xi[3 + j];
    state.qdot[j] = u[3 + j];
  }
}

SimState Simulator::substep_impl(const SimState& state,
                                 const JointArray<double>& ext_torques,
                                 const ImplicitPd* pd, const PhysicsParams& params,
                                 double dt_sim, ContactDebug* debug,
                                 SimTelemetry* telemetry) const {
  const ChainDynamics& dyn = chain_for(params);
  const int nd = 13;
  std::vector<double> xi, u;
  to_generalized(state, xi, u);
  const ChainKinematics kin = dyn.kinematics(xi, u);

  std::vector<double> M, h;
  dyn.mass_matrix(kin, M);
  dyn.bias_forces(kin, h);

  std::vector<double> tau_gen(nd, 0.0);
  for (int j = 0; j < kNumJoints; ++j) tau_gen[3 + j] = ext_torques[j];

  // Soft joint-limit springs.
  for (int j = 0; j < kNumJoints; ++j) {
    const double lo = model_.joint_limit_min[j];
    const double hi = model_.joint_limit_max[j];
    if (state.q[j] > hi) {
      tau_gen[3 + j] += -config_.limit_kp * (state.q[j] - hi) -
                        config_.limit_kd * state.qdot[j];
    } else if (state.q[j] < lo) {
      tau_gen[3 + j] += -config_.limit_kp * (state.q[j] - lo) -
                        config_.limit_kd * state.qdot[j];
    }
  }

  // Both ground contact and joint PD are solved implicitly against the
  // end-of-step velocity:
  //   (M + dt J^T D J + dt^2 J^T K J) v' = M v + dt (tau - h + J^T f_spring)
  // which keeps the stiffness needed for <=2 mm standing penetration and
  // for stiff ankle servos stable at the default substep. Friction and
  // torque limits are handled with an active-set loop: offenders switch to
  // explicit boundary forces and the system is re-solved.
  struct ContactPoint {
    int foot;
    std::vector<double> jx, jz;  // Jacobian rows
    double pen;
    bool clamped = false;   // friction pinned to the cone boundary
    double f_t = 0.0;       // explicit tangential force when clamped
    double normal = 0.0;    // realized forces after the solve
    double tangent = 0.0;
  };
  std::vector<ContactPoint> points;
  std::vector<double> J;
  const Vec2 pts[2] = {{-model_.heel_offset, -model_.ankle_height},
                       {model_.toe_offset, -model_.ankle_height}};
  const int foot_links[2] = {kFootLinkL, kFootLinkR};
  for (int f = 0; f < 2; ++f) {
    for (const Vec2& local : pts) {
      const Vec2 p = dyn.point_position(kin, foot_links[f], local);
      if (p.z >= 0.0) continue;
      dyn.point_jacobian(kin, foot_links[f], local, J);
      ContactPoint cp;
      cp.foot = f;
      cp.pen = -p.z;
      cp.jx.assign(J.begin(), J.begin() + nd);
      cp.jz.assign(J.begin() + nd, J.end());
      points.push_back(std::move(cp));
    }
  }

  // Per-joint PD state for the active-set loop.
  JointArray<double> pd_kp{}, pd_kd{}, pd_target{};
  JointArray<bool> saturated{};
  JointArray<double> sat_torque{};
  JointArray<double> realized{};
  if (pd) {
    for (int j = 0; j < kNumJoints; ++j) {
      pd_kp[j] = params.motor_strength[j] * model_.kp[j];
      pd_kd[j] = params.motor_strength[j] * model_.kd[j];
      pd_target[j] = pd->target[j];
    }
  }

  const double kp = config_.contact_kp;
  const double kd = config_.contact_kd;
  const double ct = config_.tangent_damping;
  std::vector<double> A(nd * nd), b(nd), vnew(nd);
  for (int pass = 0; pass < 6; ++pass) {
    A = M;
    for (int i = 0; i < nd; ++i) {
      double mv = 0.0;
      for (int j = 0; j < nd; ++j) mv += M[i * nd + j] * u[j];
      b[i] = mv + dt_sim * (tau_gen[i] - h[i]);
    }
    if (pd) {
      for (int j = 0; j < kNumJoints; ++j) {
        const int c = 3 + j;
        if (saturated[j]) {
          b[c] += dt_sim * sat_torque[j];
        } else {
          A[c * nd + c] += dt_sim * (pd_kd[j] + dt_sim * pd_kp[j]);
          b[c] += dt_sim * pd_kp[j] * (pd_target[j] - state.q[j]);
        }
      }
    }
    for (const ContactPoint& cp : points) {
      const double wn = dt_sim * (kd + dt_sim * kp);
      for (int i = 0; i < nd; ++i) {
        b[i] += dt_sim * cp.jz[i] * kp * cp.pen;
        if (cp.clamped) b[i] += dt_sim * cp.jx[i] * cp.f_t;
        for (int j = 0; j < nd; ++j) {
          double add = wn * cp.jz[i] * cp.jz[j];
          if (!cp.clamped) add += dt_sim * ct * cp.jx[i] * cp.jx[j];
          A[i * nd + j] += add;
        }
      }
    }
    vnew = b;
    ChainDynamics::solve_spd(A, vnew, nd);

    bool changed = false;

    // Realized PD torques; saturate against the limits.
    if (pd) {
      for (int j = 0; j < kNumJoints; ++j) {
        if (saturated[j]) {
          realized[j] = sat_torque[j];
          continue;
        }
        const double tau_j = pd_kp[j] * (pd_target[j] - state.q[j]) -
                             (pd_kd[j] + dt_sim * pd_kp[j]) * vnew[3 + j];
        const double lim = model_.torque_limits[j];
        if (std::fabs(tau_j) > lim) {
          saturated[j] = true;
          sat_torque[j] = std::clamp(tau_j, -lim, lim);
          realized[j] = sat_torque[j];
          changed = true;
        } else {
          realized[j] = tau_j;
        }
      }
    }

    // Realized contact forces; adjust the active set.
    for (auto it = points.begin(); it != points.end();) {
      ContactPoint& cp = *it;
      double vpz = 0.0, vpx = 0.0;
      for (int i = 0; i < nd; ++i) {
        vpz += cp.jz[i] * vnew[i];
        vpx += cp.jx[i] * vnew[i];
      }
      cp.normal = kp * cp.pen - (kd + dt_sim * kp) * vpz;
      if (cp.normal < 0.0) {
        it = points.erase(it);  // separating; drop the point
        changed = true;
        continue;
      }
      const double cone = params.friction * cp.normal;
      if (!cp.clamped) {
        cp.tangent = -ct * vpx;
        if (std::fabs(cp.tangent) > cone) {
          cp.clamped = true;
          cp.f_t = std::clamp(cp.tangent, -cone, cone);
          changed = true;
        }
      } else {
        cp.f_t = std::clamp(cp.f_t, -cone, cone);
        cp.tangent = cp.f_t;
      }
      ++it;
    }
    if (!changed) break;
  }

  if (pd && telemetry) {
    for (int j = 0; j < kNumJoints; ++j) {
      if (saturated[j]) ++telemetry->torque_saturations;
    }
  }

  std::array<bool, 2> contact{false, false};
  for (const ContactPoint& cp : points) contact[cp.foot] = true;
  if (debug) {
    debug->points.clear();
    for (const ContactPoint& cp : points) {
      debug->points.push_back({cp.foot, cp.normal, cp.tangent});
    }
  }

  for (int i = 0; i < nd; ++i) {
    u[i] = vnew[i];
    xi[i] += u[i] * dt_sim;
  }

  SimState next = state;
  from_generalized(xi, u, next);
  next.time = state.time + dt_sim;
  next.contact = contact;
  if (!next.finite()) throw SimDivergedError();
  return next;
}

SimState Simulator::step(const SimState& state, const JointArray<double>& torques,
                         const PhysicsParams& params, double dt_sim,
                         ContactDebug* debug) const {
  return substep_impl(state, torques, nullptr, params, dt_sim, debug, nullptr);
}

SimState Simulator::control_step(const SimState& state, const JointArray<double>& action,
                                 const PhysicsParams& params,
                                 SimTelemetry* telemetry) const {
  ImplicitPd pd;
  for (int j = 0; j < kNumJoints; ++j) {
    pd.target[j] = action[j] + params.default_joint_offset[j];
  }
  SimState s = state;
  const double dt = config_.dt_sim();
  for (int k = 0; k < config_.substeps; ++k) {
    s = substep_impl(s, JointArray<double>{}, &pd, params, dt, nullptr, telemetry);
  }
  return s;
}

SimState Simulator::reset_rsi(const MotionClip& clip, int frame_index,
                              const RsiNoise& noise, Rng& rng) const {
  if (frame_index < 0 || frame_index >= clip.num_frames()) {
    throw std::out_of_range("rsi frame index outside clip");
  }
  const MotionFrame& f = clip.frames[frame_index];
  SimState s;
  s.root_pos.x = f.root_pos.x + rng.gaussian(0.0, noise.root_position);
  s.root_pos.z = f.root_pos.z + rng.gaussian(0.0, noise.root_position);
  s.root_rot = Rot2::from_angle(f.root_rot.angle() + rng.gaussian(0.0, noise.root_rotation));
  s.root_vel.x = clip.root_vel[frame_index].x + rng.gaussian(0.0, noise.root_velocity);
  s.root_vel.z = clip.root_vel[frame_index].z + rng.gaussian(0.0, noise.root_velocity);
  s.root_angvel = clip.root_angvel[frame_index] + rng.gaussian(0.0, noise.root_angular_vel);
  for (int j = 0; j < kNumJoints; ++j) {
    s.q[j] = model_.clamp_joint(j, f.q[j] + rng.gaussian(0.0, noise.joint_position));
    s.qdot[j] = clip.qdot[frame_index][j];
  }
  s.time = 0.0;
  return s;
}

PhysicsParams Simulator::sample_dr(const DrConfig& config, Rng& rng) {
  config.validate();
  PhysicsParams p;
  p.base_mass_offset = rng.uniform(config.base_mass.min, config.base_mass.max);
  p.friction = rng.uniform(config.friction.min, config.friction.max);
  for (int j = 0; j < kNumJoints; ++j) {
    p.motor_strength[j] = rng.uniform(config.motor_strength.min, config.motor_strength.max);
  }
  for (int j = 0; j < kNumJoints; ++j) {
    p.default_joint_offset[j] =
        rng.uniform(config.default_joint_pos.min, config.default_joint_pos.max);
  }
  return p;
}

SimState Simulator::apply_push(const SimState& state, const DrConfig& config, Rng& rng) {
  SimState s = state;
  s.root_vel.x += rng.uniform(config.push_velocity.min, config.push_velocity.max);
  s.root_vel.z += rng.uniform(config.push_velocity.min, config.push_velocity.max);
  return s;
}

double Simulator::total_energy(const SimState& state, const PhysicsParams& params) const {
  const ChainDynamics& dyn = chain_for(params);
  std::vector<double> xi, u;
  to_generalized(state, xi, u);
  return dyn.total_energy(dyn.kinematics(xi, u));
}

}  // namespace tracklab
