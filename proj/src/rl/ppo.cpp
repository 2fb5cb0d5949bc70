#include "tracklab/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "tracklab/core/binio.hpp"
#include "tracklab/nn/checkpoint.hpp"

namespace tracklab {

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma in (0,1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("ppo: gae_lambda in (0,1]");
  }
  if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip must be > 0");
  if (epochs < 1 || minibatches < 1) throw std::invalid_argument("ppo: epochs/minibatches >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo: learning_rate > 0");
  if (rollout_steps < 1 || num_envs < 1) throw std::invalid_argument("ppo: rollout dims >= 1");
}

PpoStats ppo_update(OmoePolicy& policy, const RolloutBatch& batch,
                    const GaeResult& gae, PpoConfig& cfg, Adam& optimizer,
                    Rng& shuffle_rng) {
  const int rows = batch.rows();
  const int obs_dim = policy.config().obs_dim;
  const int act_dim = policy.config().action_dim;

  std::vector<double> adv = gae.advantages;
  normalize_advantages(adv);

  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);

  PpoStats stats;
  stats.lr = optimizer.lr();
  int update_count = 0;
  const int mb_size = std::max(1, rows / cfg.minibatches);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the trainer's own stream keeps runs reproducible.
    for (int i = rows - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_index(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_kl = 0.0;
    int epoch_updates = 0;
    for (int start = 0; start < rows; start += mb_size) {
      const int count = std::min(mb_size, rows - start);
      if (count < 2) break;

      Mat obs(count, obs_dim), actions(count, act_dim);
      Mat advantages(count, 1), returns(count, 1), old_logp(count, 1);
      for (int r = 0; r < count; ++r) {
        const int src = order[start + r];
        std::copy(batch.obs.v.begin() + static_cast<size_t>(src) * obs_dim,
                  batch.obs.v.begin() + static_cast<size_t>(src + 1) * obs_dim,
                  obs.v.begin() + static_cast<size_t>(r) * obs_dim);
        std::copy(batch.actions.v.begin() + static_cast<size_t>(src) * act_dim,
                  batch.actions.v.begin() + static_cast<size_t>(src + 1) * act_dim,
                  actions.v.begin() + static_cast<size_t>(r) * act_dim);
        advantages.at(r, 0) = adv[src];
        returns.at(r, 0) = gae.returns[src];
        old_logp.at(r, 0) = batch.log_probs[src];
      }

      Graph g;
      Var x = g.input(std::move(obs));
      PolicyForward fwd = policy.forward(g, x);
      Var lp = gaussian_log_prob_graph(g, fwd.mean, g.param(policy.log_std()),
                                       g.input(std::move(actions)));
      Var ratio = g.exp_(g.sub(lp, g.input(std::move(old_logp))));
      Var adv_in = g.input(std::move(advantages));
      Var surr1 = g.mul(ratio, adv_in);
      Var surr2 = g.mul(g.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), adv_in);
      Var policy_loss = g.scale(g.mean_all(g.minimum(surr1, surr2)), -1.0);
      Var value_loss = g.mean_all(g.square(g.sub(fwd.value, g.input(std::move(returns)))));
      Var entropy = gaussian_entropy_graph(g, g.param(policy.log_std()), act_dim);
      Var loss = g.add(policy_loss, g.add(g.scale(value_loss, cfg.value_coef),
                                          g.scale(entropy, -cfg.entropy_coef)));

      const double loss_value = g.value(loss).at(0, 0);
      if (!std::isfinite(loss_value)) {
        ++stats.skipped_updates;
        optimizer.set_lr(std::max(cfg.lr_min, optimizer.lr() * 0.5));
        std::fprintf(stderr,
                     "[ppo] non-finite loss; skipping update, lr halved to %g\n",
                     optimizer.lr());
        continue;
      }

      // Diagnostics from the forward values.
      double kl = 0.0, clipped = 0.0;
      const Mat& ratio_v = g.value(ratio);
      for (int r = 0; r < count; ++r) {
        const double rv = ratio_v.at(r, 0);
        kl += (rv - 1.0) - std::log(std::max(rv, 1e-12));
        if (std::fabs(rv - 1.0) > cfg.clip) clipped += 1.0;
      }
      kl /= count;
      clipped /= count;

      optimizer.zero_grad();
      g.backward(loss);
      const double gnorm = optimizer.step(cfg.max_grad_norm);

      stats.policy_loss += g.value(policy_loss).at(0, 0);
      stats.value_loss += g.value(value_loss).at(0, 0);
      stats.entropy += g.value(entropy).at(0, 0);
      stats.approx_kl += kl;
      stats.clip_fraction += clipped;
      stats.grad_norm += gnorm;
      epoch_kl += kl;
      ++epoch_updates;
      ++update_count;
    }

    // KL-adaptive learning rate (shrink on overshoot, grow when timid).
    if (epoch_updates > 0) {
      epoch_kl /= epoch_updates;
      double lr = optimizer.lr();
      if (epoch_kl > 2.0 * cfg.kl_target) {
        lr = std::max(cfg.lr_min, lr / 1.5);
      } else if (epoch_kl < 0.5 * cfg.kl_target) {
        lr = std::min(cfg.lr_max, lr * 1.5);
      }
      optimizer.set_lr(lr);
    }
  }

  if (update_count > 0) {
    stats.policy_loss /= update_count;
    stats.value_loss /= update_count;
    stats.entropy /= update_count;
    stats.approx_kl /= update_count;
    stats.clip_fraction /= update_count;
    stats.grad_norm /= update_count;
  }
  stats.lr = optimizer.lr();
  return stats;
}

double train_history_encoder(HistoryEncoder& encoder, const RolloutBatch& batch,
                             Adam& optimizer, int minibatches) {
  const int rows = batch.rows();
  const int hist_dim = batch.histories.cols;
  const int priv_dim = batch.privileged.cols;
  const int mb_size = std::max(1, rows / std::max(1, minibatches));

  double first_loss = -1.0;
  for (int start = 0; start < rows; start += mb_size) {
    const int count = std::min(mb_size, rows - start);
    Mat hist(count, hist_dim), target(count, priv_dim);
    std::copy(batch.histories.v.begin() + static_cast<size_t>(start) * hist_dim,
              batch.histories.v.begin() + static_cast<size_t>(start + count) * hist_dim,
              hist.v.begin());
    std::copy(batch.privileged.v.begin() + static_cast<size_t>(start) * priv_dim,
              batch.privileged.v.begin() + static_cast<size_t>(start + count) * priv_dim,
              target.v.begin());
    Graph g;
    EncoderForward fwd = encoder.forward(g, g.input(std::move(hist)));
    Var loss = g.mean_all(g.square(g.sub(fwd.prediction, g.input(std::move(target)))));
    if (first_loss < 0.0) first_loss = g.value(loss).at(0, 0);
    optimizer.zero_grad();
    g.backward(loss);
    optimizer.step(1.0);
  }
  return first_loss;
}

TeacherTrainer::TeacherTrainer(const RobotModel& model, std::vector<MotionClip> clips,
                               const EnvConfig& env_config, PpoConfig ppo_config,
                               PolicyConfig policy_config, EncoderConfig encoder_config,
                               uint64_t seed)
    : model_(model),
      clips_(std::move(clips)),
      ppo_config_(ppo_config),
      policy_((policy_config.obs_dim = teacher_obs_dim(env_config.rewards), policy_config),
              Rng::derive_seed(seed, 1)),
      encoder_((encoder_config.history_len = env_config.student_history, encoder_config),
               Rng::derive_seed(seed, 2)),
      policy_opt_(policy_.params(), ppo_config.learning_rate),
      encoder_opt_(encoder_.params(), 1e-3),
      trainer_rng_(Rng::derive_seed(seed, 3)) {
  ppo_config_.validate();
  envs_ = make_envs(model_, env_config, &clips_, ppo_config_.num_envs, seed);
}

IterationStats TeacherTrainer::iterate() {
  RolloutBatch batch =
      collect_rollouts(policy_, envs_, ppo_config_.rollout_steps, parallel_rollouts);
  GaeResult gae = compute_gae(batch, ppo_config_.gamma, ppo_config_.gae_lambda);

  IterationStats stats;
  stats.iteration = ++iteration_;
  const double steps = static_cast<double>(batch.rows());
  double reward_sum = 0.0;
  for (double r : batch.rewards) reward_sum += r;
  stats.reward_mean = reward_sum / steps;
  stats.episodes_done = batch.episodes_done;
  stats.episodes_failed = batch.episodes_failed;
  const long ended = batch.episodes_done + batch.episodes_failed;
  stats.success_rate = ended > 0 ? static_cast<double>(batch.episodes_done) / ended : -1.0;
  stats.term_means = batch.reward_sums;
  auto scale_term = [&](double& v) { v /= steps; };
  scale_term(stats.term_means.root_pos);
  scale_term(stats.term_means.root_vel);
  scale_term(stats.term_means.root_rot);
  scale_term(stats.term_means.keybody_pos);
  scale_term(stats.term_means.keybody_vel);
  scale_term(stats.term_means.keybody_rot);
  scale_term(stats.term_means.action_rate);
  scale_term(stats.term_means.feet_slip);
  scale_term(stats.term_means.torque_limits);
  scale_term(stats.term_means.joint_limits);
  scale_term(stats.term_means.joint_vel);
  scale_term(stats.term_means.joint_acc);
  stats.gs_fallbacks = batch.gs_fallbacks;

  stats.ppo = ppo_update(policy_, batch, gae, ppo_config_, policy_opt_, trainer_rng_);
  stats.encoder_loss = train_history_encoder(encoder_, batch, encoder_opt_);

  for (auto& env : envs_) {
    stats.torque_saturations += env->telemetry().torque_saturations;
    stats.pushes += env->telemetry().pushes;
    stats.divergences += env->telemetry().divergences;
    env->telemetry() = SimTelemetry{};
  }
  return stats;
}

std::string policy_encoder_arch(OmoePolicy& policy, HistoryEncoder& encoder) {
  return policy.config().describe() + "+" + encoder.config().describe();
}

namespace {
std::vector<Param*> combined_params(OmoePolicy& policy, HistoryEncoder& encoder) {
  std::vector<Param*> ps = policy.params();
  auto es = encoder.params();
  ps.insert(ps.end(), es.begin(), es.end());
  return ps;
}
}  // namespace

void save_policy_and_encoder(OmoePolicy& policy, HistoryEncoder& encoder,
                             const std::string& path) {
  save_weights(combined_params(policy, encoder), policy_encoder_arch(policy, encoder),
               path);
}

void load_policy_and_encoder(OmoePolicy& policy, HistoryEncoder& encoder,
                             const std::string& path) {
  load_weights(combined_params(policy, encoder), policy_encoder_arch(policy, encoder),
               path);
}

void TeacherTrainer::save_policy_checkpoint(const std::string& path) {
  save_policy_and_encoder(policy_, encoder_, path);
}

void TeacherTrainer::load_policy_checkpoint(const std::string& path) {
  load_policy_and_encoder(policy_, encoder_, path);
}

void TeacherTrainer::save_train_state(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write train state '" + path + "'");
  os.write("TLTRAIN1", 8);
  binio::write_string(os, policy_encoder_arch(policy_, encoder_));
  binio::write_u64(os, static_cast<uint64_t>(iteration_));

  auto dump_params = [&](std::vector<Param*> ps) {
    binio::write_u64(os, ps.size());
    for (Param* p : ps) binio::write_doubles(os, p->value.v);
  };
  dump_params(policy_.params());
  dump_params(encoder_.params());

  std::vector<double> opt_state;
  policy_opt_.save_state(opt_state);
  binio::write_doubles(os, opt_state);
  encoder_opt_.save_state(opt_state);
  binio::write_doubles(os, opt_state);

  binio::write_string(os, trainer_rng_.save_state());
  binio::write_u64(os, envs_.size());
  for (auto& env : envs_) {
    std::vector<double> snapshot;
    std::string rng_state;
    env->serialize(snapshot, rng_state);
    binio::write_doubles(os, snapshot);
    binio::write_string(os, rng_state);
  }
  if (!os) throw std::runtime_error("train state write failed '" + path + "'");
}

void TeacherTrainer::load_train_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open train state '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "TLTRAIN1") {
    throw std::runtime_error("not a train state file: '" + path + "'");
  }
  const std::string arch = binio::read_string(is);
  if (arch != policy_encoder_arch(policy_, encoder_)) {
    throw std::runtime_error("train state architecture mismatch");
  }
  iteration_ = static_cast<int>(binio::read_u64(is));

  auto load_params = [&](std::vector<Param*> ps) {
    const uint64_t n = binio::read_u64(is);
    if (n != ps.size()) throw std::runtime_error("train state parameter count mismatch");
    for (Param* p : ps) {
      auto v = binio::read_doubles(is);
      if (v.size() != p->value.size()) {
        throw std::runtime_error("train state blob size mismatch");
      }
      p->value.v = std::move(v);
    }
  };
  load_params(policy_.params());
  load_params(encoder_.params());

  policy_opt_.load_state(binio::read_doubles(is));
  encoder_opt_.load_state(binio::read_doubles(is));
  trainer_rng_.load_state(binio::read_string(is));
  const uint64_t env_count = binio::read_u64(is);
  if (env_count != envs_.size()) throw std::runtime_error("train state env count mismatch");
  for (auto& env : envs_) {
    const auto snapshot = binio::read_doubles(is);
    const std::string rng_state = binio::read_string(is);
    env->deserialize(snapshot, rng_state);
  }
}

}  // namespace tracklab
