#include "tracklab/eval/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "tracklab/motion/fk.hpp"

namespace tracklab {

TrialMetrics run_trial(OmoePolicy& policy, HistoryEncoder* encoder,
                       const RobotModel& model, const std::vector<MotionClip>& clips,
                       int clip_index, const EnvConfig& env_config, uint64_t seed,
                       bool kinematic_replay) {
  EnvConfig cfg = env_config;
  cfg.randomize_start_frame = false;
  cfg.rsi_noise_enabled = false;
  cfg.pushes_enabled = false;

  TrackingEnv env(model, cfg, &clips, seed);
  env.reset_to(clip_index, 0);
  const MotionClip& clip = clips[clip_index];
  const bool student = encoder != nullptr;
  const int act_dim = policy.config().action_dim;

  TrialMetrics m;
  double kpe = 0.0, jpe = 0.0, pos = 0.0, vel = 0.0;
  long frames = 0;
  bool failed = false;

  SimState replay_state;  // kinematic mode cursor
  for (int t = 1; t < clip.num_frames(); ++t) {
    if (kinematic_replay) {
      // Bypass dynamics: the state IS the reference.
      replay_state.root_pos = clip.frames[t].root_pos;
      replay_state.root_rot = clip.frames[t].root_rot;
      replay_state.root_vel = clip.root_vel[t];
      replay_state.root_angvel = clip.root_angvel[t];
      replay_state.q = clip.frames[t].q;
      replay_state.qdot = clip.qdot[t];
    } else {
      Mat obs;
      if (student) {
        const auto& so = env.student_obs();
        const auto& hist = env.proprio_history();
        Mat h(1, static_cast<int>(hist.size()));
        std::copy(hist.begin(), hist.end(), h.v.begin());
        const auto lat = encoder->encode(h);
        obs = Mat(1, static_cast<int>(so.size()) + lat.latent.cols);
        std::copy(so.begin(), so.end(), obs.v.begin());
        std::copy(lat.latent.v.begin(), lat.latent.v.end(), obs.v.begin() + so.size());
      } else {
        const auto& to = env.teacher_obs();
        obs = Mat(1, static_cast<int>(to.size()));
        std::copy(to.begin(), to.end(), obs.v.begin());
      }
      const auto fwd = policy.act(obs);
      JointArray<double> action{};
      for (int j = 0; j < act_dim; ++j) action[j] = fwd.mean.at(0, j);
      const EnvStepResult res = env.step(action);
      if (res.termination == Termination::kFail) {
        failed = true;
      }
    }

    const SimState& s = kinematic_replay ? replay_state : env.state();
    const KeybodyPose kb = forward_kinematics(model, s.root_pos, s.root_rot, s.q);
    const Keypose rel = to_root_frame(s.root_pos, s.root_rot, kb);
    double kpe_t = 0.0;
    for (int k = 0; k < kNumKeybodies; ++k) {
      kpe_t += (rel.pos[k] - clip.keybody_rel[t].pos[k]).norm();
    }
    kpe += kpe_t / kNumKeybodies;
    double jpe_t = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      jpe_t += std::fabs(s.q[j] - clip.frames[t].q[j]);
    }
    jpe += jpe_t / kNumJoints;
    pos += (s.root_pos - clip.frames[t].root_pos).norm();
    vel += (s.root_vel - clip.root_vel[t]).norm();
    ++frames;
    if (failed) break;
  }

  m.success = !failed;
  if (frames > 0) {
    m.e_mpkpe_mm = kpe / frames * 1000.0;
    m.e_mpjpe_rad = jpe / frames;
    m.e_pos_mm = pos / frames * 1000.0;
    m.e_vel_ms = vel / frames;
  }
  return m;
}

MetricsReport evaluate(OmoePolicy& policy, HistoryEncoder* encoder,
                       const RobotModel& model, const std::vector<MotionClip>& clips,
                       const EnvConfig& env_config, const EvalOptions& options) {
  if (clips.empty()) throw std::invalid_argument("evaluate: empty clip set");
  MetricsReport report;
  report.clips.resize(clips.size());

  const int trials = options.trials;
  const int total = static_cast<int>(clips.size()) * trials;
  std::vector<TrialMetrics> all(total);

#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int idx = 0; idx < total; ++idx) {
    const int ci = idx / trials;
    const int trial = idx % trials;
    const uint64_t seed = Rng::derive_seed(options.seed, 7000 + idx);
    all[idx] = run_trial(policy, encoder, model, clips, ci, env_config, seed,
                         options.kinematic_replay);
    (void)trial;
  }

  auto fill = [&](ClipMetrics& row, int ci) {
    double kpe = 0, jpe = 0, pos = 0, vel = 0, succ = 0, kpe2 = 0;
    for (int t = 0; t < trials; ++t) {
      const TrialMetrics& m = all[ci * trials + t];
      kpe += m.e_mpkpe_mm;
      kpe2 += m.e_mpkpe_mm * m.e_mpkpe_mm;
      jpe += m.e_mpjpe_rad;
      pos += m.e_pos_mm;
      vel += m.e_vel_ms;
      succ += m.success ? 1.0 : 0.0;
    }
    row.e_mpkpe_mm = kpe / trials;
    row.e_mpjpe_rad = jpe / trials;
    row.e_pos_mm = pos / trials;
    row.e_vel_ms = vel / trials;
    row.success_rate = succ / trials;
    const double var = kpe2 / trials - row.e_mpkpe_mm * row.e_mpkpe_mm;
    row.e_mpkpe_std = var > 0 ? std::sqrt(var) : 0.0;
  };

  for (size_t ci = 0; ci < clips.size(); ++ci) {
    ClipMetrics& row = report.clips[ci];
    row.name = clips[ci].name;
    row.duration_s = clips[ci].duration();
    fill(row, static_cast<int>(ci));
  }

  ClipMetrics& agg = report.aggregate;
  agg.name = "aggregate";
  for (const auto& row : report.clips) {
    agg.duration_s += row.duration_s;
    agg.e_mpkpe_mm += row.e_mpkpe_mm;
    agg.e_mpjpe_rad += row.e_mpjpe_rad;
    agg.e_pos_mm += row.e_pos_mm;
    agg.e_vel_ms += row.e_vel_ms;
    agg.success_rate += row.success_rate;
    agg.e_mpkpe_std += row.e_mpkpe_std;
  }
  const double n = static_cast<double>(report.clips.size());
  agg.duration_s /= n;
  agg.e_mpkpe_mm /= n;
  agg.e_mpjpe_rad /= n;
  agg.e_pos_mm /= n;
  agg.e_vel_ms /= n;
  agg.success_rate /= n;
  agg.e_mpkpe_std /= n;
  return report;
}

std::vector<DurationBucket> duration_buckets(const MetricsReport& report,
                                             const std::vector<double>& boundaries) {
  std::vector<DurationBucket> buckets;
  double lo = 0.0;
  for (double b : boundaries) {
    buckets.push_back({lo, b, 0, {}});
    lo = b;
  }
  buckets.push_back({lo, std::numeric_limits<double>::infinity(), 0, {}});

  for (const auto& row : report.clips) {
    for (auto& bucket : buckets) {
      if (row.duration_s >= bucket.lo_s && row.duration_s < bucket.hi_s) {
        bucket.clip_count++;
        bucket.mean.e_mpkpe_mm += row.e_mpkpe_mm;
        bucket.mean.e_mpjpe_rad += row.e_mpjpe_rad;
        bucket.mean.e_pos_mm += row.e_pos_mm;
        bucket.mean.e_vel_ms += row.e_vel_ms;
        bucket.mean.success_rate += row.success_rate;
        break;
      }
    }
  }
  for (auto& bucket : buckets) {
    if (bucket.clip_count == 0) continue;
    bucket.mean.e_mpkpe_mm /= bucket.clip_count;
    bucket.mean.e_mpjpe_rad /= bucket.clip_count;
    bucket.mean.e_pos_mm /= bucket.clip_count;
    bucket.mean.e_vel_ms /= bucket.clip_count;
    bucket.mean.success_rate /= bucket.clip_count;
  }
  return buckets;
}

void write_report_text(const MetricsReport& report, const std::string& label,
                       std::ostream& os) {
  os << "== " << label << " ==\n";
  os << std::left << std::setw(18) << "clip" << std::right << std::setw(9) << "dur_s"
     << std::setw(12) << "mpkpe_mm" << std::setw(12) << "mpjpe_rad" << std::setw(11)
     << "pos_mm" << std::setw(10) << "vel_m/s" << std::setw(9) << "succ" << "\n";
  auto line = [&](const ClipMetrics& m) {
    os << std::left << std::setw(18) << m.name << std::right << std::fixed
       << std::setprecision(2) << std::setw(9) << m.duration_s << std::setw(12)
       << m.e_mpkpe_mm << std::setw(12) << std::setprecision(4) << m.e_mpjpe_rad
       << std::setw(11) << std::setprecision(1) << m.e_pos_mm << std::setw(10)
       << std::setprecision(3) << m.e_vel_ms << std::setw(9) << std::setprecision(2)
       << m.success_rate << "\n";
  };
  for (const auto& m : report.clips) line(m);
  line(report.aggregate);
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report '" + path + "'");
  os << "clip,duration_s,e_mpkpe_mm,e_mpkpe_std,e_mpjpe_rad,e_pos_mm,e_vel_ms,success_rate\n";
  auto line = [&](const ClipMetrics& m) {
    os << m.name << ',' << m.duration_s << ',' << m.e_mpkpe_mm << ',' << m.e_mpkpe_std
       << ',' << m.e_mpjpe_rad << ',' << m.e_pos_mm << ',' << m.e_vel_ms << ','
       << m.success_rate << "\n";
  };
  for (const auto& m : report.clips) line(m);
  line(report.aggregate);
}

}  // namespace tracklab
