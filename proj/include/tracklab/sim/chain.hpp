#pragma once

#include <vector>

#include "tracklab/core/vec2.hpp"

namespace tracklab {

// Generic planar articulated tree. Links connect to their parent through a
// revolute joint at `anchor` (expressed in the parent link frame). With a
// floating base, link 0 carries the base coordinates (x, z, pitch) and the
// generalized vector is [x, z, pitch, q_1..q_{n-1}]; with a fixed base every
// link (including link 0, anchored to the world) contributes one joint.
struct ChainLink {
  int parent = -1;            // -1 = world / base
  Vec2 anchor;                // joint position in the parent frame
  double mass = 1.0;
  double inertia = 0.01;      // about COM
  Vec2 com;                   // COM in the link frame
};

struct PlanarChain {
  bool floating_base = true;
  std::vector<ChainLink> links;
  double gravity = 9.81;

  int ndof() const {
    return static_cast<int>(links.size()) + (floating_base ? 2 : 0);
  }
  int num_links() const { return static_cast<int>(links.size()); }
};

// Per-link world kinematics for one configuration.
struct ChainKinematics {
  std::vector<double> angle;   // world link angle
  std::vector<Vec2> origin;    // world joint/origin position
  std::vector<Vec2> com;       // world COM
  std::vector<double> omega;
  std::vector<Vec2> com_vel;
  std::vector<Vec2> origin_vel;
};

// Cached Cholesky factorization of an SPD matrix; lets the contact solver
// reuse the factor for effective-mass queries within one substep.
class Cholesky {
 public:
  void factor(std::vector<double> M, int n);  // throws if not SPD
  void solve(std::vector<double>& rhs) const;

 private:
  std::vector<double> L_;
  int n_ = 0;
};

class ChainDynamics {
 public:
  explicit ChainDynamics(PlanarChain chain);

  const PlanarChain& chain() const { return chain_; }
  int ndof() const { return chain_.ndof(); }

  // xi = generalized positions, u = generalized velocities.
  ChainKinematics kinematics(const std::vector<double>& xi,
                             const std::vector<double>& u) const;

  // Dense symmetric mass matrix, row-major ndof x ndof.
  void mass_matrix(const ChainKinematics& kin, std::vector<double>& M) const;

  // Coriolis + gravity generalized forces h such that M du = tau_gen - h.
  void bias_forces(const ChainKinematics& kin, std::vector<double>& h) const;

  // 2 x ndof Jacobian of a point attached to `link` at `local` coordinates;
  // rows packed [dx/du..., dz/du...].
  void point_jacobian(const ChainKinematics& kin, int link, const Vec2& local,
                      std::vector<double>& J) const;

  Vec2 point_position(const ChainKinematics& kin, int link, const Vec2& local) const;
  Vec2 point_velocity(const ChainKinematics& kin, int link, const Vec2& local) const;

  // Solves M du = rhs in place (Cholesky; M must be positive definite).
  static void solve_spd(std::vector<double> M, std::vector<double>& rhs, int n);

  // One semi-implicit Euler substep: u += du*dt, xi += u*dt. `tau_gen` is the
  // full generalized force (actuation + external already mapped through
  // Jacobians); gravity and velocity products are handled internally.
  void step(std::vector<double>& xi, std::vector<double>& u,
            const std::vector<double>& tau_gen, double dt) const;

  // Kinetic + gravitational potential energy; the conserved quantity of the
  // passive chain without contact.
  double total_energy(const ChainKinematics& kin) const;

 private:
  // Maps link index -> generalized coordinate index of its joint (-1 = base).
  int joint_coord(int link) const;

  PlanarChain chain_;
  std::vector<int> parent_;
};

}  // namespace tracklab
