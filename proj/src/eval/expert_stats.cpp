#include "tracklab/eval/expert_stats.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "tracklab/rewards/observations.hpp"

namespace tracklab {

namespace {

SimState state_of_frame(const MotionClip& clip, int t) {
  SimState s;
  s.root_pos = clip.frames[t].root_pos;
  s.root_rot = clip.frames[t].root_rot;
  s.root_vel = clip.root_vel[t];
  s.root_angvel = clip.root_angvel[t];
  s.q = clip.frames[t].q;
  s.qdot = clip.qdot[t];
  return s;
}

Mat clip_reference_obs(const RobotModel& model, const MotionClip& clip,
                       const RewardConfig& cfg) {
  const int n = clip.num_frames();
  Mat obs(n, teacher_obs_dim(cfg));
  std::vector<double> row;
  for (int t = 0; t < n; ++t) {
    row.clear();
    const SimState s = state_of_frame(clip, t);
    build_teacher_obs(model, s, clip.frames[t].q, clip, t, cfg, row);
    std::copy(row.begin(), row.end(), obs.v.begin() + static_cast<size_t>(t) * obs.cols);
  }
  return obs;
}

}  // namespace

std::string clip_category(const std::string& name) {
  std::string cat;
  for (char c : name) {
    if (!std::isalpha(static_cast<unsigned char>(c))) break;
    cat.push_back(c);
  }
  return cat.empty() ? "other" : cat;
}

ExpertStats expert_stats(OmoePolicy& policy, const RobotModel& model,
                         const std::vector<MotionClip>& clips, const RewardConfig& cfg) {
  if (policy.config().arch == PolicyArch::kMlp) {
    throw std::invalid_argument("expert stats need a mixture policy");
  }
  const int m = policy.config().experts;
  ExpertStats stats;
  for (const auto& clip : clips) {
    const Mat obs = clip_reference_obs(model, clip, cfg);
    const auto fwd = policy.act(obs, /*diagnostics=*/true);
    const std::string cat = clip_category(clip.name);
    auto& acc = stats.activation[cat];
    acc.resize(m, 0.0);
    for (int t = 0; t < obs.rows; ++t) {
      for (int i = 0; i < m; ++i) acc[i] += fwd.alpha.at(t, i);
    }
    stats.frames_per_category[cat] += obs.rows;
  }
  for (auto& [cat, acc] : stats.activation) {
    const double n = static_cast<double>(stats.frames_per_category[cat]);
    for (double& v : acc) v /= n;
  }
  return stats;
}

void dump_expert_features(OmoePolicy& policy, const RobotModel& model,
                          const std::vector<MotionClip>& clips, const RewardConfig& cfg,
                          const std::string& path) {
  if (policy.config().arch == PolicyArch::kMlp) {
    throw std::invalid_argument("feature dump needs a mixture policy");
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write feature dump '" + path + "'");
  const int m = policy.config().experts;
  const int d = policy.config().feature_dim;
  os << "clip\tcategory\tframe\texpert";
  for (int k = 0; k < d; ++k) os << "\tf" << k;
  os << "\n";
  os.precision(10);
  for (const auto& clip : clips) {
    const Mat obs = clip_reference_obs(model, clip, cfg);
    const auto fwd = policy.act(obs, /*diagnostics=*/true);
    const std::string cat = clip_category(clip.name);
    for (int t = 0; t < obs.rows; ++t) {
      for (int i = 0; i < m; ++i) {
        os << clip.name << '\t' << cat << '\t' << t << '\t' << i;
        for (int k = 0; k < d; ++k) os << '\t' << fwd.features.at(t, i * d + k);
        os << "\n";
      }
    }
  }
}

void write_expert_stats(const ExpertStats& stats, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write expert stats '" + path + "'");
  os << "category";
  size_t m = 0;
  for (const auto& [cat, acc] : stats.activation) m = std::max(m, acc.size());
  for (size_t i = 0; i < m; ++i) os << ",expert" << i;
  os << ",frames\n";
  for (const auto& [cat, acc] : stats.activation) {
    os << cat;
    for (double v : acc) os << ',' << v;
    os << ',' << stats.frames_per_category.at(cat) << "\n";
  }
}

}  // namespace tracklab
