#include "tracklab/eval/ablation.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace tracklab {

AblationVariant parse_ablation_variant(const std::string& name) {
  if (name == "omoe") return AblationVariant::kOmoe;
  if (name == "moe") return AblationVariant::kMoe;
  if (name == "mlp") return AblationVariant::kMlp;
  if (name == "segment") return AblationVariant::kSegment;
  if (name == "stepwise") return AblationVariant::kStepwise;
  if (name == "global-only") return AblationVariant::kGlobalOnly;
  throw std::invalid_argument("unknown ablation variant '" + name + "'");
}

std::string ablation_variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::kOmoe: return "omoe";
    case AblationVariant::kMoe: return "moe";
    case AblationVariant::kMlp: return "mlp";
    case AblationVariant::kSegment: return "segment";
    case AblationVariant::kStepwise: return "stepwise";
    case AblationVariant::kGlobalOnly: return "global-only";
  }
  return "?";
}

void apply_variant(AblationVariant v, PolicyConfig& policy, RewardConfig& rewards) {
  switch (v) {
    case AblationVariant::kOmoe:
    case AblationVariant::kSegment:
      policy.arch = PolicyArch::kOmoe;
      break;
    case AblationVariant::kMoe:
      policy.arch = PolicyArch::kMoe;
      break;
    case AblationVariant::kMlp:
      policy.arch = PolicyArch::kMlp;
      break;
    case AblationVariant::kStepwise:
      policy.arch = PolicyArch::kOmoe;
      rewards.segment_window = 0;
      break;
    case AblationVariant::kGlobalOnly:
      policy.arch = PolicyArch::kOmoe;
      rewards.segment_window = 0;
      rewards.keybody_frame = KeybodyFrame::kWorld;
      break;
  }
}

std::vector<AblationRow> ablation_run(const RobotModel& model,
                                      const std::vector<MotionClip>& train_clips,
                                      const std::vector<MotionClip>& test_clips,
                                      const EnvConfig& env_config,
                                      const PpoConfig& ppo_config,
                                      const PolicyConfig& policy_config,
                                      const EncoderConfig& encoder_config,
                                      const AblationSettings& settings,
                                      std::ostream* log) {
  std::vector<AblationRow> rows;
  for (AblationVariant v : settings.variants) {
    PolicyConfig pc = policy_config;
    EnvConfig ec = env_config;
    apply_variant(v, pc, ec.rewards);
    if (pc.arch == PolicyArch::kMlp && pc.mlp_hidden.empty()) size_mlp_to_match(pc);

    if (log) {
      *log << "[ablate] training variant '" << ablation_variant_name(v) << "' for "
           << settings.iterations << " iterations\n"
           << std::flush;
    }
    TeacherTrainer trainer(model, train_clips, ec, ppo_config, pc, encoder_config,
                           settings.seed);
    for (int i = 0; i < settings.iterations; ++i) {
      const IterationStats st = trainer.iterate();
      if (log && (i + 1) % 50 == 0) {
        *log << "[ablate] " << ablation_variant_name(v) << " iter " << (i + 1)
             << " reward " << st.reward_mean << " success " << st.success_rate << "\n"
             << std::flush;
      }
    }

    EvalOptions opt;
    opt.trials = settings.eval_trials;
    opt.seed = Rng::derive_seed(settings.seed, 0xEE);
    AblationRow row;
    row.variant = ablation_variant_name(v);
    row.train = evaluate(trainer.policy(), nullptr, model, train_clips, ec, opt);
    row.test = evaluate(trainer.policy(), nullptr, model, test_clips, ec, opt);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& os) {
  os << std::left << std::setw(13) << "variant";
  for (const char* split : {"train", "test"}) {
    os << std::right << std::setw(12) << (std::string(split) + "_mpkpe") << std::setw(12)
       << (std::string(split) + "_pos") << std::setw(12) << (std::string(split) + "_succ");
  }
  os << "\n";
  for (const auto& row : rows) {
    os << std::left << std::setw(13) << row.variant << std::right << std::fixed
       << std::setprecision(1) << std::setw(12) << row.train.aggregate.e_mpkpe_mm
       << std::setw(12) << row.train.aggregate.e_pos_mm << std::setw(12)
       << std::setprecision(3) << row.train.aggregate.success_rate << std::setprecision(1)
       << std::setw(12) << row.test.aggregate.e_mpkpe_mm << std::setw(12)
       << row.test.aggregate.e_pos_mm << std::setw(12) << std::setprecision(3)
       << row.test.aggregate.success_rate << "\n";
  }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write ablation table '" + path + "'");
  os << "variant,split,e_mpkpe_mm,e_mpjpe_rad,e_pos_mm,e_vel_ms,success_rate\n";
  for (const auto& row : rows) {
    auto line = [&](const char* split, const MetricsReport& r) {
      os << row.variant << ',' << split << ',' << r.aggregate.e_mpkpe_mm << ','
         << r.aggregate.e_mpjpe_rad << ',' << r.aggregate.e_pos_mm << ','
         << r.aggregate.e_vel_ms << ',' << r.aggregate.success_rate << "\n";
    };
    line("train", row.train);
    line("test", row.test);
  }
}

}  // namespace tracklab
