#include "tracklab/cli/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tracklab {

namespace {

using nlohmann::json;

json range_json(const Range& r) { return json::array({r.min, r.max}); }

json defaults_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;

  j["sim"] = {{"control_dt", c.env.sim.control_dt},
              {"substeps", c.env.sim.substeps},
              {"gravity", c.env.sim.gravity},
              {"contact_kp", c.env.sim.contact_kp},
              {"contact_kd", c.env.sim.contact_kd},
              {"tangent_damping", c.env.sim.tangent_damping}};

  const RewardConfig& r = c.env.rewards;
  j["rewards"] = {{"w_root_pos", r.w_root_pos},
                  {"w_root_vel", r.w_root_vel},
                  {"w_root_rot", r.w_root_rot},
                  {"w_keybody_pos", r.w_keybody_pos},
                  {"w_keybody_vel", r.w_keybody_vel},
                  {"w_keybody_rot", r.w_keybody_rot},
                  {"w_action_rate", r.w_action_rate},
                  {"w_feet_slip", r.w_feet_slip},
                  {"w_torque_limits", r.w_torque_limits},
                  {"w_joint_limits", r.w_joint_limits},
                  {"w_joint_vel", r.w_joint_vel},
                  {"w_joint_acc", r.w_joint_acc},
                  {"sigma_root_pos", r.sigma_root_pos},
                  {"sigma_keybody", r.sigma_keybody},
                  {"sigma_vel", r.sigma_vel},
                  {"sigma_rot", r.sigma_rot},
                  {"segment_window", r.segment_window},
                  {"goal_preview", r.goal_preview},
                  {"term_root_height", r.term_root_height},
                  {"term_keybody_error", r.term_keybody_error},
                  {"keybody_frame", r.keybody_frame == KeybodyFrame::kRoot ? "root" : "world"}};

  j["dr"] = {{"base_mass", range_json(c.env.dr.base_mass)},
             {"friction", range_json(c.env.dr.friction)},
             {"motor_strength", range_json(c.env.dr.motor_strength)},
             {"default_joint_pos", range_json(c.env.dr.default_joint_pos)},
             {"push_velocity", range_json(c.env.dr.push_velocity)},
             {"push_interval", c.env.dr.push_interval},
             {"enabled", c.env.dr_enabled},
             {"pushes_enabled", c.env.pushes_enabled}};

  j["rsi"] = {{"joint_position", c.env.rsi.joint_position},
              {"root_position", c.env.rsi.root_position},
              {"root_velocity", c.env.rsi.root_velocity},
              {"root_rotation", c.env.rsi.root_rotation},
              {"root_angular_vel", c.env.rsi.root_angular_vel},
              {"enabled", c.env.rsi_noise_enabled}};

  j["ppo"] = {{"gamma", c.ppo.gamma},
              {"gae_lambda", c.ppo.gae_lambda},
              {"clip", c.ppo.clip},
              {"epochs", c.ppo.epochs},
              {"minibatches", c.ppo.minibatches},
              {"entropy_coef", c.ppo.entropy_coef},
              {"value_coef", c.ppo.value_coef},
              {"learning_rate", c.ppo.learning_rate},
              {"kl_target", c.ppo.kl_target},
              {"rollout_steps", c.ppo.rollout_steps},
              {"num_envs", c.ppo.num_envs},
              {"iterations", c.ppo.iterations},
              {"checkpoint_every", c.ppo.checkpoint_every}};

  j["omoe"] = {{"arch", policy_arch_name(c.policy.arch)},
               {"experts", c.policy.experts},
               {"feature_dim", c.policy.feature_dim},
               {"expert_hidden", c.policy.expert_hidden},
               {"router_hidden", c.policy.router_hidden},
               {"head_hidden", c.policy.head_hidden},
               {"value_hidden", c.policy.value_hidden},
               {"init_log_std", c.policy.init_log_std}};

  j["distill"] = {{"num_envs", c.distill.num_envs},
                  {"rollout_steps", c.distill.rollout_steps},
                  {"iterations", c.distill.iterations},
                  {"learning_rate", c.distill.learning_rate},
                  {"epochs", c.distill.epochs},
                  {"minibatches", c.distill.minibatches},
                  {"buffer_cap", c.distill.buffer_cap},
                  {"eval_envs", c.distill.eval_envs},
                  {"eval_steps", c.distill.eval_steps},
                  {"checkpoint_every", c.distill.checkpoint_every},
                  {"history_len", c.env.student_history},
                  {"conv_channels", c.encoder.conv_channels},
                  {"latent_dim", c.encoder.latent_dim}};

  j["eval"] = {{"trials", c.eval.trials}, {"duration_buckets", c.eval.duration_buckets}};
  j["ablate"] = {{"iterations", c.ablate.iterations},
                 {"eval_trials", c.ablate.eval_trials}};
  return j;
}

// Rejects keys absent from the defaults, recursively, reporting the path.
void check_unknown_keys(const json& defaults, const json& user, const std::string& path) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string sub = path.empty() ? it.key() : path + "." + it.key();
    if (!defaults.is_object() || !defaults.contains(it.key())) {
      throw std::invalid_argument("unknown config key '" + sub + "'");
    }
    if (it.value().is_object()) check_unknown_keys(defaults[it.key()], it.value(), sub);
  }
}

void merge(json& base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

Range parse_range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("config '" + path + "' must be [min, max]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

RunConfig from_resolved(const json& j) {
  RunConfig c;
  c.seed = j.at("seed").get<uint64_t>();

  const json& sim = j.at("sim");
  c.env.sim.control_dt = sim.at("control_dt").get<double>();
  c.env.sim.substeps = sim.at("substeps").get<int>();
  c.env.sim.gravity = sim.at("gravity").get<double>();
  c.env.sim.contact_kp = sim.at("contact_kp").get<double>();
  c.env.sim.contact_kd = sim.at("contact_kd").get<double>();
  c.env.sim.tangent_damping = sim.at("tangent_damping").get<double>();

  const json& r = j.at("rewards");
  RewardConfig& rw = c.env.rewards;
  rw.w_root_pos = r.at("w_root_pos").get<double>();
  rw.w_root_vel = r.at("w_root_vel").get<double>();
  rw.w_root_rot = r.at("w_root_rot").get<double>();
  rw.w_keybody_pos = r.at("w_keybody_pos").get<double>();
  rw.w_keybody_vel = r.at("w_keybody_vel").get<double>();
  rw.w_keybody_rot = r.at("w_keybody_rot").get<double>();
  rw.w_action_rate = r.at("w_action_rate").get<double>();
  rw.w_feet_slip = r.at("w_feet_slip").get<double>();
  rw.w_torque_limits = r.at("w_torque_limits").get<double>();
  rw.w_joint_limits = r.at("w_joint_limits").get<double>();
  rw.w_joint_vel = r.at("w_joint_vel").get<double>();
  rw.w_joint_acc = r.at("w_joint_acc").get<double>();
  rw.sigma_root_pos = r.at("sigma_root_pos").get<double>();
  rw.sigma_keybody = r.at("sigma_keybody").get<double>();
  rw.sigma_vel = r.at("sigma_vel").get<double>();
  rw.sigma_rot = r.at("sigma_rot").get<double>();
  rw.segment_window = r.at("segment_window").get<int>();
  rw.goal_preview = r.at("goal_preview").get<int>();
  rw.term_root_height = r.at("term_root_height").get<double>();
  rw.term_keybody_error = r.at("term_keybody_error").get<double>();
  const std::string frame = r.at("keybody_frame").get<std::string>();
  if (frame == "root") {
    rw.keybody_frame = KeybodyFrame::kRoot;
  } else if (frame == "world") {
    rw.keybody_frame = KeybodyFrame::kWorld;
  } else {
    throw std::invalid_argument("rewards.keybody_frame must be 'root' or 'world'");
  }

  const json& dr = j.at("dr");
  c.env.dr.base_mass = parse_range(dr.at("base_mass"), "dr.base_mass");
  c.env.dr.friction = parse_range(dr.at("friction"), "dr.friction");
  c.env.dr.motor_strength = parse_range(dr.at("motor_strength"), "dr.motor_strength");
  c.env.dr.default_joint_pos =
      parse_range(dr.at("default_joint_pos"), "dr.default_joint_pos");
  c.env.dr.push_velocity = parse_range(dr.at("push_velocity"), "dr.push_velocity");
  c.env.dr.push_interval = dr.at("push_interval").get<double>();
  c.env.dr_enabled = dr.at("enabled").get<bool>();
  c.env.pushes_enabled = dr.at("pushes_enabled").get<bool>();

  const json& rsi = j.at("rsi");
  c.env.rsi.joint_position = rsi.at("joint_position").get<double>();
  c.env.rsi.root_position = rsi.at("root_position").get<double>();
  c.env.rsi.root_velocity = rsi.at("root_velocity").get<double>();
  c.env.rsi.root_rotation = rsi.at("root_rotation").get<double>();
  c.env.rsi.root_angular_vel = rsi.at("root_angular_vel").get<double>();
  c.env.rsi_noise_enabled = rsi.at("enabled").get<bool>();

  const json& ppo = j.at("ppo");
  c.ppo.gamma = ppo.at("gamma").get<double>();
  c.ppo.gae_lambda = ppo.at("gae_lambda").get<double>();
  c.ppo.clip = ppo.at("clip").get<double>();
  c.ppo.epochs = ppo.at("epochs").get<int>();
  c.ppo.minibatches = ppo.at("minibatches").get<int>();
  c.ppo.entropy_coef = ppo.at("entropy_coef").get<double>();
  c.ppo.value_coef = ppo.at("value_coef").get<double>();
  c.ppo.learning_rate = ppo.at("learning_rate").get<double>();
  c.ppo.kl_target = ppo.at("kl_target").get<double>();
  c.ppo.rollout_steps = ppo.at("rollout_steps").get<int>();
  c.ppo.num_envs = ppo.at("num_envs").get<int>();
  c.ppo.iterations = ppo.at("iterations").get<int>();
  c.ppo.checkpoint_every = ppo.at("checkpoint_every").get<int>();

  const json& om = j.at("omoe");
  c.policy.arch = parse_policy_arch(om.at("arch").get<std::string>());
  c.policy.experts = om.at("experts").get<int>();
  c.policy.feature_dim = om.at("feature_dim").get<int>();
  c.policy.expert_hidden = om.at("expert_hidden").get<std::vector<int>>();
  c.policy.router_hidden = om.at("router_hidden").get<std::vector<int>>();
  c.policy.head_hidden = om.at("head_hidden").get<std::vector<int>>();
  c.policy.value_hidden = om.at("value_hidden").get<std::vector<int>>();
  c.policy.init_log_std = om.at("init_log_std").get<double>();

  const json& d = j.at("distill");
  c.distill.num_envs = d.at("num_envs").get<int>();
  c.distill.rollout_steps = d.at("rollout_steps").get<int>();
  c.distill.iterations = d.at("iterations").get<int>();
  c.distill.learning_rate = d.at("learning_rate").get<double>();
  c.distill.epochs = d.at("epochs").get<int>();
  c.distill.minibatches = d.at("minibatches").get<int>();
  c.distill.buffer_cap = d.at("buffer_cap").get<int>();
  c.distill.eval_envs = d.at("eval_envs").get<int>();
  c.distill.eval_steps = d.at("eval_steps").get<int>();
  c.distill.checkpoint_every = d.at("checkpoint_every").get<int>();
  c.env.student_history = d.at("history_len").get<int>();
  c.encoder.conv_channels = d.at("conv_channels").get<int>();
  c.encoder.latent_dim = d.at("latent_dim").get<int>();
  c.encoder.history_len = c.env.student_history;
  c.encoder.in_channels = kStudentFrameDim;

  const json& ev = j.at("eval");
  c.eval.trials = ev.at("trials").get<int>();
  c.eval.duration_buckets = ev.at("duration_buckets").get<std::vector<double>>();

  const json& ab = j.at("ablate");
  c.ablate.iterations = ab.at("iterations").get<int>();
  c.ablate.eval_trials = ab.at("eval_trials").get<int>();
  return c;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  json resolved = defaults_json(RunConfig{});
  check_unknown_keys(resolved, user, "");
  merge(resolved, user);
  RunConfig c = from_resolved(resolved);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::resolved_json() const {
  return defaults_json(*this).dump(1);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& path, const std::string& what) {
    throw std::invalid_argument("config " + path + ": " + what);
  };
  try {
    env.rewards.validate();
  } catch (const std::exception& e) {
    fail("rewards", e.what());
  }
  try {
    env.dr.validate();
  } catch (const std::exception& e) {
    fail("dr", e.what());
  }
  try {
    env.rsi.validate();
  } catch (const std::exception& e) {
    fail("rsi", e.what());
  }
  try {
    ppo.validate();
  } catch (const std::exception& e) {
    fail("ppo", e.what());
  }
  if (env.sim.substeps < 1) fail("sim.substeps", "must be >= 1");
  if (!(env.sim.control_dt > 0)) fail("sim.control_dt", "must be > 0");
  if (policy.experts < 1) fail("omoe.experts", "must be >= 1");
  if (policy.feature_dim < policy.experts) {
    fail("omoe.feature_dim", "must be >= omoe.experts");
  }
  if (env.student_history < 1) fail("distill.history_len", "must be >= 1");
  if (eval.trials < 1) fail("eval.trials", "must be >= 1");
}

uint64_t input_content_hash(const std::string& resolved_config,
                            const std::vector<std::string>& files) {
  uint64_t h = 14695981039346656037ULL;
  auto feed = [&](const char* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 1099511628211ULL;
    }
  };
  feed(resolved_config.data(), resolved_config.size());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash input '" + f + "'");
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
      feed(buf, static_cast<size_t>(in.gcount()));
      if (!in) break;
    }
  }
  return h;
}

}  // namespace tracklab
