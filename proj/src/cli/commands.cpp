#include "tracklab/cli/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "tracklab/eval/expert_stats.hpp"
#include "tracklab/motion/clip_io.hpp"
#include "tracklab/motion/curate.hpp"
#include "tracklab/motion/generate.hpp"
#include "tracklab/nn/checkpoint.hpp"

namespace tracklab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A run directory is owned by one process at a time.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / "lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw std::runtime_error("run directory '" + dir.string() +
                               "' is locked by another process");
    }
    std::fclose(f);
  }
  ~RunLock() { std::remove(path_.c_str()); }

 private:
  fs::path path_;
};

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return RunConfig::load(path);
}

std::vector<std::string> clip_files_in(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_run_manifest(const fs::path& out_dir, const RunConfig& cfg,
                        const std::vector<std::string>& inputs) {
  const std::string resolved = cfg.resolved_json();
  std::ofstream cf(out_dir / "resolved_config.json");
  cf << resolved << "\n";
  std::ofstream hf(out_dir / "inputs.hash");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(input_content_hash(resolved, inputs)));
  hf << buf << "\n";
}

json stats_to_json(const IterationStats& st) {
  return json{{"iter", st.iteration},
              {"reward_mean", st.reward_mean},
              {"success_rate", st.success_rate},
              {"episodes_done", st.episodes_done},
              {"episodes_failed", st.episodes_failed},
              {"policy_loss", st.ppo.policy_loss},
              {"value_loss", st.ppo.value_loss},
              {"entropy", st.ppo.entropy},
              {"kl", st.ppo.approx_kl},
              {"clip_fraction", st.ppo.clip_fraction},
              {"lr", st.ppo.lr},
              {"grad_norm", st.ppo.grad_norm},
              {"encoder_loss", st.encoder_loss},
              {"torque_saturations", st.torque_saturations},
              {"pushes", st.pushes},
              {"divergences", st.divergences},
              {"gs_fallbacks", st.gs_fallbacks},
              {"terms",
               {{"root_pos", st.term_means.root_pos},
                {"root_vel", st.term_means.root_vel},
                {"root_rot", st.term_means.root_rot},
                {"keybody_pos", st.term_means.keybody_pos},
                {"keybody_vel", st.term_means.keybody_vel},
                {"keybody_rot", st.term_means.keybody_rot},
                {"action_rate", st.term_means.action_rate},
                {"feet_slip", st.term_means.feet_slip},
                {"torque_limits", st.term_means.torque_limits},
                {"joint_limits", st.term_means.joint_limits},
                {"joint_vel", st.term_means.joint_vel},
                {"joint_acc", st.term_means.joint_acc}}}};
}

struct LoadedPolicy {
  OmoePolicy policy;
  HistoryEncoder encoder;
};

LoadedPolicy load_policy_checkpoint(const std::string& path) {
  const std::string arch = peek_arch(path);
  const auto plus = arch.find('+');
  if (plus == std::string::npos) {
    throw std::runtime_error("checkpoint '" + path + "' has no combined architecture");
  }
  PolicyConfig pc = PolicyConfig::parse_describe(arch.substr(0, plus));
  EncoderConfig ec = EncoderConfig::parse_describe(arch.substr(plus + 1));
  LoadedPolicy lp{OmoePolicy(pc, 0), HistoryEncoder(ec, 0)};
  load_policy_and_encoder(lp.policy, lp.encoder, path);
  return lp;
}

}  // namespace

std::string resolve_data_dir(const std::string& dir) {
  if (!dir.empty()) return dir;
  const char* root = std::getenv("TRACKLAB_DATA");
  if (root && *root) return root;
  throw std::runtime_error("no clip directory given and TRACKLAB_DATA is not set");
}

int cmd_gen_motions(const GenMotionsArgs& args) {
  try {
    const RobotModel model = RobotModel::standard();
    const MotionKind kind = parse_motion_kind(args.kind);
    GenParams p;
    p.stride = args.stride;
    p.period = args.period;
    p.squat_depth = args.squat_depth;
    p.amplitude = args.amplitude;

    if (args.count == 1 && args.out.size() > 5 &&
        args.out.substr(args.out.size() - 5) == ".json") {
      const MotionClip clip =
          generate_motion(kind, p, args.duration, args.dt, args.seed, model);
      save_clip(clip, args.out);
      std::cout << "wrote " << args.out << " (" << clip.num_frames() << " frames)\n";
      return kExitOk;
    }

    fs::create_directories(args.out);
    for (int i = 0; i < args.count; ++i) {
      const uint64_t seed = Rng::derive_seed(args.seed, i);
      GenParams pi = p;
      if (args.count > 1) {
        // Mild per-clip variation so a batch is not `count` copies.
        Rng jitter(seed);
        pi.stride = p.stride * jitter.uniform(0.85, 1.15);
        pi.period = p.period * jitter.uniform(0.9, 1.1);
        pi.amplitude = p.amplitude * jitter.uniform(0.85, 1.1);
        pi.squat_depth = p.squat_depth * jitter.uniform(0.8, 1.1);
      }
      const MotionClip clip = generate_motion(kind, pi, args.duration, args.dt, seed, model);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%02d.json", args.kind.c_str(), i);
      save_clip(clip, (fs::path(args.out) / name).string());
    }
    std::cout << "wrote " << args.count << " clip(s) to " << args.out << "\n";
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }
}

int cmd_curate(const CurateArgs& args) {
  RunConfig cfg;
  try {
    cfg = load_config_or_default(args.config_path);
    if (args.trials < 1) throw std::invalid_argument("curate: trials must be >= 1");
    if (args.threshold < 0.0 || args.threshold > 1.0) {
      throw std::invalid_argument("curate: threshold must be in [0,1]");
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const RobotModel model = RobotModel::standard();
    const std::string dir = resolve_data_dir(args.clips_dir);
    std::vector<MotionClip> clips = load_clip_dir(dir, model);
    if (clips.empty()) {
      std::cerr << "error: no clips in '" << dir << "'\n";
      return kExitMissingInput;
    }
    LoadedPolicy lp = load_policy_checkpoint(args.policy_ckpt);

    TrialRunner runner = [&](const MotionClip& clip, int trial) {
      int index = 0;
      for (size_t i = 0; i < clips.size(); ++i) {
        if (&clips[i] == &clip) index = static_cast<int>(i);
      }
      const TrialMetrics m =
          run_trial(lp.policy, nullptr, model, clips, index, cfg.env,
                    Rng::derive_seed(args.seed, index * 1000 + trial), false);
      return TrialResult{m.success, m.e_mpkpe_mm, m.e_mpjpe_rad};
    };
    const CurationResult result = curate_dataset(runner, clips, args.trials, args.threshold);
    write_curation_report(result, args.report);
    std::cout << "kept " << result.kept_indices.size() << "/" << clips.size()
              << " clips; report at " << args.report << "\n";
    return kExitOk;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }
}

int cmd_train_teacher(const TrainTeacherArgs& args) {
  RunConfig cfg;
  try {
    cfg = load_config_or_default(args.config_path);
    if (args.iterations_override > 0) cfg.ppo.iterations = args.iterations_override;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<MotionClip> clips;
  std::vector<std::string> clip_files;
  const RobotModel model = RobotModel::standard();
  try {
    const std::string dir = resolve_data_dir(args.clips_dir);
    clip_files = clip_files_in(dir);
    clips = load_clip_dir(dir, model);
    if (clips.empty()) throw std::runtime_error("no clips in '" + dir + "'");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }

  try {
    RunLock lock(args.out_dir);
    write_run_manifest(args.out_dir, cfg, clip_files);
    TeacherTrainer trainer(model, clips, cfg.env, cfg.ppo, cfg.policy, cfg.encoder,
                           cfg.seed);
    if (!args.resume.empty()) {
      trainer.load_train_state(args.resume);
      std::cout << "resumed at iteration " << trainer.iteration() << "\n";
    }

    std::ofstream metrics(fs::path(args.out_dir) / "metrics.jsonl", std::ios::app);
    while (trainer.iteration() < cfg.ppo.iterations) {
      const IterationStats st = trainer.iterate();
      metrics << stats_to_json(st).dump() << "\n" << std::flush;
      if (st.iteration % 10 == 0 || st.iteration == 1) {
        std::cout << "iter " << st.iteration << " reward " << st.reward_mean
                  << " success " << st.success_rate << " kl " << st.ppo.approx_kl
                  << " lr " << st.ppo.lr << "\n";
      }
      if (st.iteration % cfg.ppo.checkpoint_every == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "ckpt_%06d.bin", st.iteration);
        trainer.save_policy_checkpoint((fs::path(args.out_dir) / name).string());
        trainer.save_train_state((fs::path(args.out_dir) / "train_state.bin").string());
      }
    }
    trainer.save_policy_checkpoint((fs::path(args.out_dir) / "ckpt_final.bin").string());
    trainer.save_train_state((fs::path(args.out_dir) / "train_state.bin").string());
    std::cout << "done; checkpoint at " << (fs::path(args.out_dir) / "ckpt_final.bin")
              << "\n";
    return kExitOk;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("diverged") != std::string::npos) return kExitDiverged;
    if (what.find("mismatch") != std::string::npos) return kExitIncompatible;
    return kExitMissingInput;
  }
}

int cmd_distill(const DistillArgs& args) {
  RunConfig cfg;
  try {
    cfg = load_config_or_default(args.config_path);
    if (args.iterations_override > 0) cfg.distill.iterations = args.iterations_override;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const RobotModel model = RobotModel::standard();
  std::vector<MotionClip> clips;
  std::vector<std::string> clip_files;
  try {
    const std::string dir = resolve_data_dir(args.clips_dir);
    clip_files = clip_files_in(dir);
    clips = load_clip_dir(dir, model);
    if (clips.empty()) throw std::runtime_error("no clips in '" + dir + "'");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }

  LoadedPolicy teacher{OmoePolicy(), HistoryEncoder()};
  try {
    teacher = load_policy_checkpoint(args.teacher_ckpt);
    if (teacher.policy.config().obs_dim != teacher_obs_dim(cfg.env.rewards)) {
      throw std::runtime_error(
          "teacher checkpoint architecture mismatch with the configured observations");
    }
    if (teacher.encoder.config().history_len != cfg.env.student_history) {
      throw std::runtime_error("teacher checkpoint encoder history mismatch");
    }
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("mismatch") != std::string::npos) return kExitIncompatible;
    return kExitMissingInput;
  }

  try {
    RunLock lock(args.out_dir);
    write_run_manifest(args.out_dir, cfg, clip_files);

    PolicyConfig student_cfg = cfg.policy;
    student_cfg.arch = PolicyArch::kOmoe;
    StudentTrainer trainer(model, clips, cfg.env, cfg.distill, student_cfg,
                           std::move(teacher.policy), std::move(teacher.encoder),
                           cfg.seed);
    if (!args.resume.empty()) {
      trainer.load_train_state(args.resume);
      std::cout << "resumed at iteration " << trainer.iteration() << "\n";
    }

    std::ofstream metrics(fs::path(args.out_dir) / "distill_metrics.jsonl",
                          std::ios::app);
    const uint64_t checksum0 = trainer.encoder_checksum();
    while (trainer.iteration() < cfg.distill.iterations) {
      const DistillStats st = trainer.iterate();
      metrics << json{{"iter", st.iteration},
                      {"bc_loss", st.bc_loss},
                      {"held_out_mse", st.held_out_mse},
                      {"buffer_rows", st.buffer_rows}}
                     .dump()
              << "\n"
              << std::flush;
      if (st.iteration % 10 == 0 || st.iteration == 1) {
        std::cout << "iter " << st.iteration << " bc " << st.bc_loss << " held-out "
                  << st.held_out_mse << "\n";
      }
      if (st.iteration % cfg.distill.checkpoint_every == 0) {
        trainer.save_train_state((fs::path(args.out_dir) / "train_state.bin").string());
      }
    }
    if (trainer.encoder_checksum() != checksum0) {
      throw std::runtime_error("frozen history encoder changed during distillation");
    }
    trainer.save_student_checkpoint((fs::path(args.out_dir) / "student_final.bin").string());
    trainer.save_train_state((fs::path(args.out_dir) / "train_state.bin").string());
    std::cout << "done; student at " << (fs::path(args.out_dir) / "student_final.bin")
              << "\n";
    return kExitOk;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("mismatch") != std::string::npos) return kExitIncompatible;
    return kExitMissingInput;
  }
}

int cmd_eval(const EvalArgs& args) {
  RunConfig cfg;
  try {
    cfg = load_config_or_default(args.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const RobotModel model = RobotModel::standard();

  try {
    const std::string dir = resolve_data_dir(args.clips_dir);
    std::vector<MotionClip> clips = load_clip_dir(dir, model);
    if (clips.empty()) {
      std::cerr << "error: no clips in '" << dir << "'\n";
      return kExitMissingInput;
    }
    LoadedPolicy lp = load_policy_checkpoint(args.ckpt);

    EvalOptions opt;
    opt.trials = args.trials > 0 ? args.trials : cfg.eval.trials;
    opt.seed = args.seed;
    opt.kinematic_replay = args.kinematic_replay;

    fs::create_directories(args.out_dir);
    HistoryEncoder* enc = args.student ? &lp.encoder : nullptr;
    const MetricsReport train_report =
        evaluate(lp.policy, enc, model, clips, cfg.env, opt);

    std::ofstream text(fs::path(args.out_dir) / "report.txt");
    write_report_text(train_report, "Training clips", text);
    write_report_text(train_report, "Training clips", std::cout);
    write_report_csv(train_report, (fs::path(args.out_dir) / "report_train.csv").string());

    const auto buckets = duration_buckets(train_report, cfg.eval.duration_buckets);
    std::ofstream bucket_csv(fs::path(args.out_dir) / "duration_buckets.csv");
    bucket_csv << "lo_s,hi_s,clips,e_mpkpe_mm,e_pos_mm,success_rate\n";
    for (const auto& b : buckets) {
      bucket_csv << b.lo_s << ',' << b.hi_s << ',' << b.clip_count << ','
                 << b.mean.e_mpkpe_mm << ',' << b.mean.e_pos_mm << ','
                 << b.mean.success_rate << "\n";
    }

    if (!args.test_clips_dir.empty()) {
      std::vector<MotionClip> test_clips = load_clip_dir(args.test_clips_dir, model);
      if (test_clips.empty()) {
        std::cerr << "error: no clips in '" << args.test_clips_dir << "'\n";
        return kExitMissingInput;
      }
      const MetricsReport test_report =
          evaluate(lp.policy, enc, model, test_clips, cfg.env, opt);
      write_report_text(test_report, "Test clips", text);
      write_report_text(test_report, "Test clips", std::cout);
      write_report_csv(test_report, (fs::path(args.out_dir) / "report_test.csv").string());
    }

    if (!args.student && lp.policy.config().arch != PolicyArch::kMlp) {
      const ExpertStats stats = expert_stats(lp.policy, model, clips, cfg.env.rewards);
      write_expert_stats(stats, (fs::path(args.out_dir) / "expert_activation.csv").string());
      dump_expert_features(lp.policy, model, clips, cfg.env.rewards,
                           (fs::path(args.out_dir) / "expert_features.tsv").string());
    }
    return kExitOk;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("mismatch") != std::string::npos) return kExitIncompatible;
    return kExitMissingInput;
  }
}

int cmd_ablate(const AblateArgs& args) {
  RunConfig cfg;
  AblationSettings settings;
  try {
    cfg = load_config_or_default(args.config_path);
    settings.iterations =
        args.iterations_override > 0 ? args.iterations_override : cfg.ablate.iterations;
    settings.eval_trials = cfg.ablate.eval_trials;
    settings.seed = cfg.seed;
    if (!args.variants.empty()) {
      settings.variants.clear();
      std::stringstream ss(args.variants);
      std::string item;
      while (std::getline(ss, item, ',')) {
        settings.variants.push_back(parse_ablation_variant(item));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const RobotModel model = RobotModel::standard();
  try {
    std::vector<MotionClip> train_clips =
        load_clip_dir(resolve_data_dir(args.clips_dir), model);
    std::vector<MotionClip> test_clips = load_clip_dir(args.test_clips_dir, model);
    if (train_clips.empty() || test_clips.empty()) {
      std::cerr << "error: ablation needs non-empty train and test clip sets\n";
      return kExitMissingInput;
    }

    RunLock lock(args.out_dir);
    const auto rows = ablation_run(model, train_clips, test_clips, cfg.env, cfg.ppo,
                                   cfg.policy, cfg.encoder, settings, &std::cout);
    std::ofstream table(fs::path(args.out_dir) / "ablation.txt");
    write_ablation_table(rows, table);
    write_ablation_table(rows, std::cout);
    write_ablation_csv(rows, (fs::path(args.out_dir) / "ablation.csv").string());
    return kExitOk;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }
}

}  // namespace tracklab::cli
