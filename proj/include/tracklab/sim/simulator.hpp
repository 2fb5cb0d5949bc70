#pragma once

#include <memory>
#include <vector>

#include "tracklab/core/rng.hpp"
#include "tracklab/motion/clip.hpp"
#include "tracklab/motion/robot_model.hpp"
#include "tracklab/sim/chain.hpp"
#include "tracklab/sim/state.hpp"

namespace tracklab {

struct SimConfig {
  double control_dt = 0.02;
  int substeps = 4;
  double gravity = 9.81;
  // Penalty contact; stiffness sized so static standing penetration <= 2 mm.
  double contact_kp = 8.0e4;   // N/m per contact point
  double contact_kd = 4.0e2;   // N s/m (impulse-capped per substep)
  double tangent_damping = 2.0e3;  // N s/m, impulse-capped and cone-clamped
  // Soft joint-limit springs keep the integrator inside the chart.
  double limit_kp = 200.0;
  double limit_kd = 2.0;

  double dt_sim() const { return control_dt / substeps; }
};

struct SimTelemetry {
  long torque_saturations = 0;
  long pushes = 0;
  long divergences = 0;
  long gs_fallbacks = 0;  // filled by the policy side, aggregated per episode
};

// Thrown by step when the state leaves the finite range; rollout code catches
// it and resets the environment instead of aborting.
struct SimDivergedError : std::runtime_error {
  SimDivergedError() : std::runtime_error("simulation diverged") {}
};

// Realized contact forces of the last substep (test/telemetry aid).
struct ContactDebug {
  struct Point {
    int foot;
    double normal;
    double tangent;
  };
  std::vector<Point> points;
};

// Planar humanoid simulator: PD torque control, penalty ground contact with
// a friction cone, domain randomization and push perturbations. One instance
// is single-threaded and owns its state; run many instances in parallel with
// independent RNG streams.
class Simulator {
 public:
  Simulator(const RobotModel& model, const SimConfig& config);

  const RobotModel& model() const { return model_; }
  const SimConfig& config() const { return config_; }

  // tau_i = clamp(strength_i * (kp_i (a_i - q_i) - kd_i qdot_i), +-limit_i).
  JointArray<double> pd_torque(const JointArray<double>& q,
                               const JointArray<double>& qdot,
                               const JointArray<double>& action,
                               const PhysicsParams& params,
                               SimTelemetry* telemetry = nullptr) const;

  // One integrator substep of dt_sim seconds under fixed joint torques.
  // Throws SimDivergedError when the state turns non-finite.
  SimState step(const SimState& state, const JointArray<double>& torques,
                const PhysicsParams& params, double dt_sim,
                ContactDebug* debug = nullptr) const;

  // One control step: recomputes PD torques each substep against the fixed
  // target `action` (shifted by params.default_joint_offset).
  SimState control_step(const SimState& state, const JointArray<double>& action,
                        const PhysicsParams& params,
                        SimTelemetry* telemetry = nullptr) const;

  // Reference state initialization with Gaussian noise; joints clamped to
  // their limits afterwards.
  SimState reset_rsi(const MotionClip& clip, int frame_index, const RsiNoise& noise,
                     Rng& rng) const;

  static PhysicsParams sample_dr(const DrConfig& config, Rng& rng);

  // Adds a uniform velocity impulse from config.push_velocity to the root.
  static SimState apply_push(const SimState& state, const DrConfig& config, Rng& rng);

  // Energy of the current state ignoring contact (test/debug aid).
  double total_energy(const SimState& state, const PhysicsParams& params) const;

  // Conversion between SimState and the chain's generalized vectors.
  void to_generalized(const SimState& state, std::vector<double>& xi,
                      std::vector<double>& u) const;
  void from_generalized(const std::vector<double>& xi, const std::vector<double>& u,
                        SimState& state) const;

 private:
  // Joint servos integrated implicitly alongside contact; stiff ankle gains
  // (needed for unassisted standing) stay stable for the airborne foot.
  struct ImplicitPd {
    JointArray<double> target{};
  };

  SimState substep_impl(const SimState& state, const JointArray<double>& ext_torques,
                        const ImplicitPd* pd, const PhysicsParams& params,
                        double dt_sim, ContactDebug* debug,
                        SimTelemetry* telemetry) const;

  // The chain depends on the episode's base-mass offset; rebuilt only when it
  // changes. Instances are single-threaded, so the cache needs no locking.
  const ChainDynamics& chain_for(const PhysicsParams& params) const;

  RobotModel model_;
  SimConfig config_;
  mutable double cached_mass_offset_;
  mutable std::unique_ptr<ChainDynamics> cached_dynamics_;
};

// Builds the humanoid chain (head welded into the torso link) for a given
// base-mass offset; exposed for the physics tests.
PlanarChain humanoid_chain(const RobotModel& model, double gravity,
                           double base_mass_offset);

}  // namespace tracklab
