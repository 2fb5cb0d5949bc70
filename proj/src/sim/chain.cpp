#include "tracklab/sim/chain.hpp"

#include <cmath>
#include <stdexcept>

namespace tracklab {

ChainDynamics::ChainDynamics(PlanarChain chain) : chain_(std::move(chain)) {
  parent_.resize(chain_.num_links());
  for (int i = 0; i < chain_.num_links(); ++i) {
    parent_[i] = chain_.links[i].parent;
    if (parent_[i] >= i) throw std::invalid_argument("links must be topologically ordered");
  }
  if (chain_.floating_base && parent_[0] != -1) {
    throw std::invalid_argument("floating base link must have no parent");
  }
}

int ChainDynamics::joint_coord(int link) const {
  return chain_.floating_base ? 2 + link : link;
}

ChainKinematics ChainDynamics::kinematics(const std::vector<double>& xi,
                                          const std::vector<double>& u) const {
  const int n = chain_.num_links();
  ChainKinematics kin;
  kin.angle.resize(n);
  kin.origin.resize(n);
  kin.com.resize(n);
  kin.omega.resize(n);
  kin.com_vel.resize(n);
  kin.origin_vel.resize(n);

  for (int i = 0; i < n; ++i) {
    const ChainLink& link = chain_.links[i];
    const int jc = joint_coord(i);
    if (link.parent < 0) {
      if (chain_.floating_base && i == 0) {
        kin.angle[i] = xi[2];
        kin.origin[i] = {xi[0], xi[1]};
        kin.omega[i] = u[2];
        kin.origin_vel[i] = {u[0], u[1]};
      } else {
        kin.angle[i] = xi[jc];
        kin.origin[i] = link.anchor;  // world-frame anchor for fixed base
        kin.omega[i] = u[jc];
        kin.origin_vel[i] = {0.0, 0.0};
      }
    } else {
      const int p = link.parent;
      const Vec2 r = Rot2::from_angle(kin.angle[p]).rotate(link.anchor);
      kin.angle[i] = kin.angle[p] + xi[jc];
      kin.origin[i] = kin.origin[p] + r;
      kin.omega[i] = kin.omega[p] + u[jc];
      kin.origin_vel[i] = kin.origin_vel[p] + kin.omega[p] * perp(r);
    }
    const Vec2 rc = Rot2::from_angle(kin.angle[i]).rotate(link.com);
    kin.com[i] = kin.origin[i] + rc;
    kin.com_vel[i] = kin.origin_vel[i] + kin.omega[i] * perp(rc);
  }
  return kin;
}

void ChainDynamics::point_jacobian(const ChainKinematics& kin, int link,
                                   const Vec2& local, std::vector<double>& J) const {
  const int nd = ndof();
  J.assign(2 * nd, 0.0);
  const Vec2 p = point_position(kin, link, local);

  if (chain_.floating_base) {
    J[0] = 1.0;           // dx/dx
    J[nd + 1] = 1.0;      // dz/dz
  }
  // Walk up the chain; every joint between the link and the base moves p.
  for (int m = link; m >= 0; m = parent_[m]) {
    const int jc = joint_coord(m);
    const Vec2 arm = perp(p - kin.origin[m]);
    if (chain_.floating_base && m == 0) {
      J[2] = arm.x;
      J[nd + 2] = arm.z;
    } else {
      J[jc] = arm.x;
      J[nd + jc] = arm.z;
    }
  }
}

Vec2 ChainDynamics::point_position(const ChainKinematics& kin, int link,
                                   const Vec2& local) const {
  return kin.origin[link] + Rot2::from_angle(kin.angle[link]).rotate(local);
}

Vec2 ChainDynamics::point_velocity(const ChainKinematics& kin, int link,
                                   const Vec2& local) const {
  const Vec2 r = Rot2::from_angle(kin.angle[link]).rotate(local);
  return kin.origin_vel[link] + kin.omega[link] * perp(r);
}

void ChainDynamics::mass_matrix(const ChainKinematics& kin, std::vector<double>& M) const {
  const int nd = ndof();
  M.assign(nd * nd, 0.0);
  std::vector<double> J;
  for (int i = 0; i < chain_.num_links(); ++i) {
    const ChainLink& link = chain_.links[i];
    point_jacobian(kin, i, link.com, J);
    // Angular jacobian: 1 for the base pitch and for every ancestor joint.
    std::vector<int> ang_cols;
    for (int m = i; m >= 0; m = parent_[m]) {
      ang_cols.push_back((chain_.floating_base && m == 0) ? 2 : joint_coord(m));
    }
    for (int a = 0; a < nd; ++a) {
      for (int b = a; b < nd; ++b) {
        double v = link.mass * (J[a] * J[b] + J[nd + a] * J[nd + b]);
        M[a * nd + b] += v;
      }
    }
    for (int ca : ang_cols) {
      for (int cb : ang_cols) {
        if (cb >= ca) M[ca * nd + cb] += link.inertia;
      }
    }
  }
  // Mirror the upper triangle.
  for (int a = 0; a < nd; ++a) {
    for (int b = 0; b < a; ++b) M[a * nd + b] = M[b * nd + a];
  }
}

void ChainDynamics::bias_forces(const ChainKinematics& kin, std::vector<double>& h) const {
  const int nd = ndof();
  const int n = chain_.num_links();
  h.assign(nd, 0.0);

  // Recursive pass with all generalized accelerations zero and the world
  // accelerating upward at g; the resulting inertial forces are exactly the
  // Coriolis/centrifugal plus gravity terms.
  std::vector<Vec2> a_origin(n), a_com(n);
  for (int i = 0; i < n; ++i) {
    const ChainLink& link = chain_.links[i];
    if (link.parent < 0) {
      a_origin[i] = {0.0, chain_.gravity};
    } else {
      const int p = link.parent;
      const Vec2 r = Rot2::from_angle(kin.angle[p]).rotate(link.anchor);
      a_origin[i] = a_origin[p] - (kin.omega[p] * kin.omega[p]) * r;
    }
    const Vec2 rc = Rot2::from_angle(kin.angle[i]).rotate(link.com);
    a_com[i] = a_origin[i] - (kin.omega[i] * kin.omega[i]) * rc;
  }

  std::vector<double> J;
  for (int i = 0; i < n; ++i) {
    const ChainLink& link = chain_.links[i];
    point_jacobian(kin, i, link.com, J);
    const Vec2 f = link.mass * a_com[i];
    for (int c = 0; c < nd; ++c) h[c] += J[c] * f.x + J[nd + c] * f.z;
  }
}

void Cholesky::factor(std::vector<double> M, int n) {
  n_ = n;
  for (int k = 0; k < n; ++k) {
    double d = M[k * n + k];
    for (int j = 0; j < k; ++j) d -= M[k * n + j] * M[k * n + j];
    if (d <= 0.0) throw std::runtime_error("mass matrix not positive definite");
    const double lkk = std::sqrt(d);
    M[k * n + k] = lkk;
    for (int i = k + 1; i < n; ++i) {
      double v = M[i * n + k];
      for (int j = 0; j < k; ++j) v -= M[i * n + j] * M[k * n + j];
      M[i * n + k] = v / lkk;
    }
  }
  L_ = std::move(M);
}

void Cholesky::solve(std::vector<double>& rhs) const {
  const int n = n_;
  for (int i = 0; i < n; ++i) {
    double v = rhs[i];
    for (int j = 0; j < i; ++j) v -= L_[i * n + j] * rhs[j];
    rhs[i] = v / L_[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = rhs[i];
    for (int j = i + 1; j < n; ++j) v -= L_[j * n + i] * rhs[j];
    rhs[i] = v / L_[i * n + i];
  }
}

void ChainDynamics::solve_spd(std::vector<double> M, std::vector<double>& rhs, int n) {
  Cholesky chol;
  chol.factor(std::move(M), n);
  chol.solve(rhs);
}

void ChainDynamics::step(std::vector<double>& xi, std::vector<double>& u,
                         const std::vector<double>& tau_gen, double dt) const {
  const int nd = ndof();
  const ChainKinematics kin = kinematics(xi, u);
  std::vector<double> M, h;
  mass_matrix(kin, M);
  bias_forces(kin, h);
  std::vector<double> rhs(nd);
  for (int i = 0; i < nd; ++i) rhs[i] = tau_gen[i] - h[i];
  solve_spd(std::move(M), rhs, nd);
  for (int i = 0; i < nd; ++i) {
    u[i] += rhs[i] * dt;
    xi[i] += u[i] * dt;
  }
}

double ChainDynamics::total_energy(const ChainKinematics& kin) const {
  double e = 0.0;
  for (int i = 0; i < chain_.num_links(); ++i) {
    const ChainLink& link = chain_.links[i];
    e += 0.5 * link.mass * kin.com_vel[i].norm2();
    e += 0.5 * link.inertia * kin.omega[i] * kin.omega[i];
    e += link.mass * chain_.gravity * kin.com[i].z;
  }
  return e;
}

}  // namespace tracklab
