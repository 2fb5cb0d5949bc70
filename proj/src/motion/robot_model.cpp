#include "tracklab/motion/robot_model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tracklab {

const std::array<std::string, kNumJoints>& RobotModel::joint_names() {
  static const std::array<std::string, kNumJoints> names = {
      "shoulder_l", "elbow_l", "shoulder_r", "elbow_r", "hip_l",
      "knee_l",     "ankle_l", "hip_r",      "knee_r",  "ankle_r"};
  return names;
}

const std::array<std::string, kNumKeybodies>& RobotModel::keybody_names() {
  static const std::array<std::string, kNumKeybodies> names = {
      "head",   "hand_l", "hand_r", "elbow_l", "elbow_r",
      "knee_l", "knee_r", "ankle_l", "ankle_r"};
  return names;
}

RobotModel RobotModel::standard() {
  RobotModel m;
  auto rod_inertia = [](double mass, double len) { return mass * len * len / 12.0; };

  // Link order in the arrays follows LinkId.
  m.link_lengths = {0.50, 0.25, 0.30, 0.30, 0.30, 0.30,
                    0.42, 0.42, 0.20, 0.42, 0.42, 0.20};
  m.link_masses = {16.0, 4.0, 2.0, 1.2, 2.0, 1.2,
                   5.5, 3.0, 1.2, 5.5, 3.0, 1.2};
  for (int i = 0; i < kNumLinks; ++i) {
    m.link_inertias[i] = rod_inertia(m.link_masses[i], m.link_lengths[i]);
  }

  // shoulder, elbow (x2), then hip, knee, ankle (x2)
  m.joint_limit_min = {-2.5, -0.05, -2.5, -0.05, -1.6, -2.4, -0.9, -1.6, -2.4, -0.9};
  m.joint_limit_max = {2.5, 2.6, 2.5, 2.6, 1.6, 0.05, 0.9, 1.6, 0.05, 0.9};
  m.torque_limits = {60.0, 40.0, 60.0, 40.0, 160.0, 160.0, 80.0, 160.0, 160.0, 80.0};
  // Ankle servos must out-stiffen the gravitational toppling stiffness
  // (m g h ~ 390 Nm/rad) so the robot can stand without active balancing;
  // the integrator handles PD implicitly, so stiff gains stay stable.
  m.kp = {80.0, 50.0, 80.0, 50.0, 400.0, 400.0, 500.0, 400.0, 400.0, 500.0};
  m.kd = {2.0, 1.2, 2.0, 1.2, 10.0, 10.0, 6.0, 10.0, 10.0, 6.0};
  m.validate();
  return m;
}

double RobotModel::total_mass() const {
  return std::accumulate(link_masses.begin(), link_masses.end(), 0.0);
}

double RobotModel::rest_root_height() const {
  return link_lengths[kThighL] + link_lengths[kShankL] + ankle_height;
}

double RobotModel::clamp_joint(int j, double q) const {
  return std::clamp(q, joint_limit_min[j], joint_limit_max[j]);
}

void RobotModel::validate() const {
  for (int i = 0; i < kNumLinks; ++i) {
    if (!(link_lengths[i] > 0.0)) throw std::invalid_argument("link length must be > 0");
    if (!(link_masses[i] > 0.0)) throw std::invalid_argument("link mass must be > 0");
    if (!(link_inertias[i] > 0.0)) throw std::invalid_argument("link inertia must be > 0");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    if (!(joint_limit_min[j] < joint_limit_max[j])) {
      throw std::invalid_argument("joint limit min must be < max");
    }
    if (!(torque_limits[j] > 0.0)) throw std::invalid_argument("torque limit must be > 0");
    if (!(kp[j] > 0.0) || !(kd[j] >= 0.0)) throw std::invalid_argument("invalid pd gains");
  }
  if (!(ankle_height > 0.0)) throw std::invalid_argument("ankle height must be > 0");
}

}  // namespace tracklab
