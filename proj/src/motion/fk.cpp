#include "tracklab/motion/fk.hpp"

#include <stdexcept>

namespace tracklab {

KeybodyPose forward_kinematics(const RobotModel& model, const Vec2& root_pos,
                               const Rot2& root_rot,
                               const JointArray<double>& q) {
  if (!root_rot.is_unit()) throw std::invalid_argument("invalid rotation");
  const auto& len = model.link_lengths;

  KeybodyPose out;
  const Rot2 torso = root_rot;
  const Vec2 shoulder = root_pos + torso.rotate({0.0, len[kTorso]});

  out.pos[kKbHead] = root_pos + torso.rotate({0.0, len[kTorso] + len[kHead]});
  out.rot[kKbHead] = torso;

  auto arm = [&](int shoulder_j, int elbow_j, int kb_elbow, int kb_hand,
                 int ua_link, int fa_link) {
    const Rot2 ua = torso.compose(Rot2::from_angle(q[shoulder_j]));
    const Vec2 elbow = shoulder + ua.rotate({0.0, -len[ua_link]});
    const Rot2 fa = ua.compose(Rot2::from_angle(q[elbow_j]));
    const Vec2 hand = elbow + fa.rotate({0.0, -len[fa_link]});
    out.pos[kb_elbow] = elbow;
    out.rot[kb_elbow] = ua;
    out.pos[kb_hand] = hand;
    out.rot[kb_hand] = fa;
  };
  arm(kShoulderL, kElbowL, kKbElbowL, kKbHandL, kUpperArmL, kForearmL);
  arm(kShoulderR, kElbowR, kKbElbowR, kKbHandR, kUpperArmR, kForearmR);

  auto leg = [&](int hip_j, int knee_j, int kb_knee, int kb_ankle,
                 int thigh_link, int shank_link) {
    const Rot2 thigh = torso.compose(Rot2::from_angle(q[hip_j]));
    const Vec2 knee = root_pos + thigh.rotate({0.0, -len[thigh_link]});
    const Rot2 shank = thigh.compose(Rot2::from_angle(q[knee_j]));
    const Vec2 ankle = knee + shank.rotate({0.0, -len[shank_link]});
    out.pos[kb_knee] = knee;
    out.rot[kb_knee] = thigh;
    out.pos[kb_ankle] = ankle;
    out.rot[kb_ankle] = shank;
  };
  leg(kHipL, kKneeL, kKbKneeL, kKbAnkleL, kThighL, kShankL);
  leg(kHipR, kKneeR, kKbKneeR, kKbAnkleR, kThighR, kShankR);

  return out;
}

Keypose to_root_frame(const Vec2& root_pos, const Rot2& root_rot,
                      const KeybodyPose& world) {
  if (!root_rot.is_unit()) throw std::invalid_argument("invalid rotation");
  Keypose rel;
  for (int k = 0; k < kNumKeybodies; ++k) {
    rel.pos[k] = root_rot.inv_rotate(world.pos[k] - root_pos);
    rel.rot[k] = world.rot[k].relative_to(root_rot);
  }
  return rel;
}

KeybodyPose from_root_frame(const Vec2& root_pos, const Rot2& root_rot,
                            const Keypose& rel) {
  if (!root_rot.is_unit()) throw std::invalid_argument("invalid rotation");
  KeybodyPose world;
  for (int k = 0; k < kNumKeybodies; ++k) {
    world.pos[k] = root_pos + root_rot.rotate(rel.pos[k]);
    world.rot[k] = root_rot.compose(rel.rot[k]);
  }
  return world;
}

}  // namespace tracklab
