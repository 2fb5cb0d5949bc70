#include "tracklab/rl/distill.hpp"

#include <cmath>
#include <stdexcept>

#include "tracklab/core/binio.hpp"
#include "tracklab/nn/checkpoint.hpp"

namespace tracklab {

void DistillConfig::validate() const {
  if (num_envs < 1 || rollout_steps < 1) throw std::invalid_argument("distill: env dims");
  if (!(learning_rate > 0)) throw std::invalid_argument("distill: learning_rate > 0");
  if (buffer_cap < num_envs * rollout_steps) {
    throw std::invalid_argument("distill: buffer_cap smaller than one batch");
  }
}

int StudentTrainer::student_input_dim(const EnvConfig& env_config,
                                      const EncoderConfig& enc) {
  return student_obs_dim(env_config.rewards, env_config.student_history) +
         enc.latent_dim;
}

StudentTrainer::StudentTrainer(const RobotModel& model, std::vector<MotionClip> clips,
                               const EnvConfig& env_config, DistillConfig config,
                               PolicyConfig student_config, OmoePolicy teacher,
                               HistoryEncoder encoder, uint64_t seed)
    : model_(model),
      clips_(std::move(clips)),
      config_(config),
      teacher_(std::move(teacher)),
      encoder_(std::move(encoder)),
      frozen_checksum_(encoder_.checksum()),
      student_((student_config.obs_dim = student_input_dim(env_config, encoder_.config()),
                student_config),
               Rng::derive_seed(seed, 11)),
      student_opt_(student_.params(), config.learning_rate),
      trainer_rng_(Rng::derive_seed(seed, 13)) {
  config_.validate();
  if (teacher_.config().action_dim != student_.config().action_dim) {
    throw std::invalid_argument("teacher/student action dimension mismatch");
  }
  if (encoder_.config().history_len != env_config.student_history) {
    throw std::invalid_argument("encoder history length does not match the env");
  }
  envs_ = make_envs(model_, env_config, &clips_, config_.num_envs, seed);
  eval_envs_ = make_envs(model_, env_config, &clips_, config_.eval_envs,
                         Rng::derive_seed(seed, 17));
  buffer_obs_ = Mat(config_.buffer_cap, student_.config().obs_dim);
  buffer_labels_ = Mat(config_.buffer_cap, student_.config().action_dim);
}

RolloutBatch StudentTrainer::collect_student_batch(
    std::vector<std::unique_ptr<TrackingEnv>>& envs, int steps) {
  const int n = static_cast<int>(envs.size());
  const int in_dim = student_.config().obs_dim;
  const int act_dim = student_.config().action_dim;
  const int raw_dim = in_dim - encoder_.config().latent_dim;
  const int hist_dim = static_cast<int>(envs[0]->proprio_history().size());
  const int teacher_dim = teacher_.config().obs_dim;

  RolloutBatch batch;
  batch.num_envs = n;
  batch.steps = steps;
  batch.provenance = "student";
  batch.obs = Mat(n * steps, in_dim);
  batch.actions = Mat(n * steps, act_dim);  // teacher labels
  batch.dones.assign(static_cast<size_t>(n) * steps, 0);

  Mat raw(n, raw_dim), hist(n, hist_dim), teacher_obs(n, teacher_dim);
  for (int t = 0; t < steps; ++t) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      const auto& so = envs[i]->student_obs();
      std::copy(so.begin(), so.end(), raw.v.begin() + static_cast<size_t>(i) * raw_dim);
      const auto& h = envs[i]->proprio_history();
      std::copy(h.begin(), h.end(), hist.v.begin() + static_cast<size_t>(i) * hist_dim);
      const auto& to = envs[i]->teacher_obs();
      std::copy(to.begin(), to.end(),
                teacher_obs.v.begin() + static_cast<size_t>(i) * teacher_dim);
    }

    const auto latent = encoder_.encode(hist);
    const int base = t * n;
    for (int i = 0; i < n; ++i) {
      double* row = batch.obs.v.data() + static_cast<size_t>(base + i) * in_dim;
      std::copy(raw.v.begin() + static_cast<size_t>(i) * raw_dim,
                raw.v.begin() + static_cast<size_t>(i + 1) * raw_dim, row);
      std::copy(latent.latent.v.begin() + static_cast<size_t>(i) * encoder_.config().latent_dim,
                latent.latent.v.begin() + static_cast<size_t>(i + 1) * encoder_.config().latent_dim,
                row + raw_dim);
    }

    Mat student_in(n, in_dim);
    std::copy(batch.obs.v.begin() + static_cast<size_t>(base) * in_dim,
              batch.obs.v.begin() + static_cast<size_t>(base + n) * in_dim,
              student_in.v.begin());
    const auto student_fwd = student_.act(student_in);
    const auto teacher_fwd = teacher_.act(teacher_obs);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < act_dim; ++j) {
        batch.actions.at(base + i, j) = teacher_fwd.mean.at(i, j);
      }
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      JointArray<double> action{};
      for (int j = 0; j < act_dim; ++j) action[j] = student_fwd.mean.at(i, j);
      const EnvStepResult res = envs[i]->step(action);
      if (res.termination != Termination::kContinue) {
        batch.dones[base + i] = 1;
        envs[i]->reset();
      }
    }
  }
  return batch;
}

void StudentTrainer::append_to_buffer(const Mat& obs, const Mat& labels, int rows) {
  for (int r = 0; r < rows; ++r) {
    const int dst = buffer_rows_ < config_.buffer_cap ? buffer_rows_ : buffer_next_;
    std::copy(obs.v.begin() + static_cast<size_t>(r) * obs.cols,
              obs.v.begin() + static_cast<size_t>(r + 1) * obs.cols,
              buffer_obs_.v.begin() + static_cast<size_t>(dst) * obs.cols);
    std::copy(labels.v.begin() + static_cast<size_t>(r) * labels.cols,
              labels.v.begin() + static_cast<size_t>(r + 1) * labels.cols,
              buffer_labels_.v.begin() + static_cast<size_t>(dst) * labels.cols);
    if (buffer_rows_ < config_.buffer_cap) {
      ++buffer_rows_;
    } else {
      buffer_next_ = (buffer_next_ + 1) % config_.buffer_cap;
    }
  }
}

DistillStats StudentTrainer::iterate() {
  const RolloutBatch batch = collect_student_batch(envs_, config_.rollout_steps);
  append_to_buffer(batch.obs, batch.actions, batch.rows());

  DistillStats stats;
  stats.iteration = ++iteration_;
  stats.buffer_rows = buffer_rows_;

  const int in_dim = student_.config().obs_dim;
  const int act_dim = student_.config().action_dim;
  const int mb = std::max(2, buffer_rows_ / config_.minibatches);
  double loss_sum = 0.0;
  int updates = 0;
  std::vector<int> order(buffer_rows_);
  for (int i = 0; i < buffer_rows_; ++i) order[i] = i;

  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (int i = buffer_rows_ - 1; i > 0; --i) {
      const int j = static_cast<int>(trainer_rng_.uniform_index(i + 1));
      std::swap(order[i], order[j]);
    }
    for (int start = 0; start + 1 < buffer_rows_; start += mb) {
      const int count = std::min(mb, buffer_rows_ - start);
      Mat obs(count, in_dim), labels(count, act_dim);
      for (int r = 0; r < count; ++r) {
        const int src = order[start + r];
        std::copy(buffer_obs_.v.begin() + static_cast<size_t>(src) * in_dim,
                  buffer_obs_.v.begin() + static_cast<size_t>(src + 1) * in_dim,
                  obs.v.begin() + static_cast<size_t>(r) * in_dim);
        std::copy(buffer_labels_.v.begin() + static_cast<size_t>(src) * act_dim,
                  buffer_labels_.v.begin() + static_cast<size_t>(src + 1) * act_dim,
                  labels.v.begin() + static_cast<size_t>(r) * act_dim);
      }
      Graph g;
      PolicyForward fwd = student_.forward(g, g.input(std::move(obs)));
      Var loss = g.mean_all(g.square(g.sub(fwd.mean, g.input(std::move(labels)))));
      loss_sum += g.value(loss).at(0, 0);
      ++updates;
      student_opt_.zero_grad();
      g.backward(loss);
      student_opt_.step(1.0);
    }
  }
  stats.bc_loss = updates > 0 ? loss_sum / updates : 0.0;
  stats.held_out_mse = held_out_mse();
  return stats;
}

double StudentTrainer::held_out_mse() {
  const RolloutBatch eval = collect_student_batch(eval_envs_, config_.eval_steps);
  Graph g;
  PolicyForward fwd = student_.forward(g, g.input(eval.obs));
  const Mat& mean = g.value(fwd.mean);
  double err = 0.0;
  for (size_t k = 0; k < mean.size(); ++k) {
    const double d = mean.v[k] - eval.actions.v[k];
    err += d * d;
  }
  return err / static_cast<double>(mean.size());
}

void StudentTrainer::save_student_checkpoint(const std::string& path) {
  save_policy_and_encoder(student_, encoder_, path);
}

void StudentTrainer::save_train_state(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write train state '" + path + "'");
  os.write("TLDSTIL1", 8);
  binio::write_string(os, student_.config().describe());
  binio::write_u64(os, static_cast<uint64_t>(iteration_));
  auto ps = student_.params();
  binio::write_u64(os, ps.size());
  for (Param* p : ps) binio::write_doubles(os, p->value.v);
  std::vector<double> opt_state;
  student_opt_.save_state(opt_state);
  binio::write_doubles(os, opt_state);
  binio::write_string(os, trainer_rng_.save_state());
  binio::write_u64(os, static_cast<uint64_t>(buffer_rows_));
  binio::write_u64(os, static_cast<uint64_t>(buffer_next_));
  binio::write_doubles(os, buffer_obs_.v);
  binio::write_doubles(os, buffer_labels_.v);
  auto dump_envs = [&](std::vector<std::unique_ptr<TrackingEnv>>& envs) {
    binio::write_u64(os, envs.size());
    for (auto& env : envs) {
      std::vector<double> snapshot;
      std::string rng_state;
      env->serialize(snapshot, rng_state);
      binio::write_doubles(os, snapshot);
      binio::write_string(os, rng_state);
    }
  };
  dump_envs(envs_);
  dump_envs(eval_envs_);
  if (!os) throw std::runtime_error("train state write failed '" + path + "'");
}

void StudentTrainer::load_train_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open train state '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "TLDSTIL1") {
    throw std::runtime_error("not a distill train state file: '" + path + "'");
  }
  if (binio::read_string(is) != student_.config().describe()) {
    throw std::runtime_error("distill train state architecture mismatch");
  }
  iteration_ = static_cast<int>(binio::read_u64(is));
  auto ps = student_.params();
  if (binio::read_u64(is) != ps.size()) {
    throw std::runtime_error("distill state parameter count mismatch");
  }
  for (Param* p : ps) {
    auto v = binio::read_doubles(is);
    if (v.size() != p->value.size()) throw std::runtime_error("distill blob mismatch");
    p->value.v = std::move(v);
  }
  student_opt_.load_state(binio::read_doubles(is));
  trainer_rng_.load_state(binio::read_string(is));
  buffer_rows_ = static_cast<int>(binio::read_u64(is));
  buffer_next_ = static_cast<int>(binio::read_u64(is));
  buffer_obs_.v = binio::read_doubles(is);
  buffer_labels_.v = binio::read_doubles(is);
  auto read_envs = [&](std::vector<std::unique_ptr<TrackingEnv>>& envs) {
    if (binio::read_u64(is) != envs.size()) {
      throw std::runtime_error("distill state env count mismatch");
    }
    for (auto& env : envs) {
      const auto snapshot = binio::read_doubles(is);
      const std::string rng_state = binio::read_string(is);
      env->deserialize(snapshot, rng_state);
    }
  };
  read_envs(envs_);
  read_envs(eval_envs_);
}

}  // namespace tracklab
