#include "tracklab/nn/policy.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tracklab {

PolicyArch parse_policy_arch(const std::string& name) {
  if (name == "omoe") return PolicyArch::kOmoe;
  if (name == "moe") return PolicyArch::kMoe;
  if (name == "mlp") return PolicyArch::kMlp;
  throw std::invalid_argument("unknown policy arch '" + name + "'");
}

std::string policy_arch_name(PolicyArch arch) {
  switch (arch) {
    case PolicyArch::kOmoe: return "omoe";
    case PolicyArch::kMoe: return "moe";
    case PolicyArch::kMlp: return "mlp";
  }
  return "?";
}

std::string PolicyConfig::describe() const {
  std::ostringstream os;
  auto widths = [&](const std::vector<int>& w) {
    for (size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
  };
  os << policy_arch_name(arch) << "|obs=" << obs_dim << "|act=" << action_dim
     << "|M=" << experts << "|d=" << feature_dim << "|eh=";
  widths(expert_hidden);
  os << "|rh=";
  widths(router_hidden);
  os << "|hh=";
  widths(head_hidden);
  os << "|vh=";
  widths(value_hidden);
  os << "|mh=";
  widths(mlp_hidden);
  return os.str();
}

PolicyConfig PolicyConfig::parse_describe(const std::string& desc) {
  PolicyConfig c;
  c.expert_hidden.clear();
  c.router_hidden.clear();
  c.head_hidden.clear();
  c.value_hidden.clear();
  std::stringstream ss(desc);
  std::string token;
  bool first = true;
  auto widths = [](const std::string& s) {
    std::vector<int> out;
    std::stringstream ws(s);
    std::string item;
    while (std::getline(ws, item, ',')) {
      if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
  };
  while (std::getline(ss, token, '|')) {
    if (first) {
      c.arch = parse_policy_arch(token);
      first = false;
      continue;
    }
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad arch token " + token);
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "obs") c.obs_dim = std::stoi(val);
    else if (key == "act") c.action_dim = std::stoi(val);
    else if (key == "M") c.experts = std::stoi(val);
    else if (key == "d") c.feature_dim = std::stoi(val);
    else if (key == "eh") c.expert_hidden = widths(val);
    else if (key == "rh") c.router_hidden = widths(val);
    else if (key == "hh") c.head_hidden = widths(val);
    else if (key == "vh") c.value_hidden = widths(val);
    else if (key == "mh") c.mlp_hidden = widths(val);
    else throw std::invalid_argument("unknown arch key '" + key + "'");
  }
  return c;
}

void PolicyConfig::validate() const {
  if (obs_dim <= 0) throw std::invalid_argument("policy obs_dim must be > 0");
  if (action_dim <= 0) throw std::invalid_argument("policy action_dim must be > 0");
  if (arch != PolicyArch::kMlp) {
    if (experts < 1) throw std::invalid_argument("experts must be >= 1");
    if (feature_dim < experts) {
      throw std::invalid_argument("feature_dim must be >= experts");
    }
  }
}

OmoePolicy::OmoePolicy(const PolicyConfig& config, uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(Rng::derive_seed(seed, 0x90));
  if (config_.arch == PolicyArch::kMlp) {
    if (config_.mlp_hidden.empty()) size_mlp_to_match(config_);
    trunk_ = Mlp("trunk", config_.obs_dim, config_.mlp_hidden, config_.action_dim, rng, 0.01);
  } else {
    for (int i = 0; i < config_.experts; ++i) {
      experts_.push_back(Mlp("expert" + std::to_string(i), config_.obs_dim,
                             config_.expert_hidden, config_.feature_dim, rng));
    }
    router_ = Mlp("router", config_.obs_dim, config_.router_hidden, config_.experts, rng);
    head_ = Mlp("head", config_.feature_dim, config_.head_hidden, config_.action_dim, rng, 0.01);
  }
  value_head_ = Mlp("value", config_.obs_dim, config_.value_hidden, 1, rng, 0.01);
  Mat ls(1, config_.action_dim);
  for (double& v : ls.v) v = config_.init_log_std;
  log_std_ = Param("log_std", std::move(ls));
}

PolicyForward OmoePolicy::forward(Graph& g, Var obs) {
  PolicyForward out;
  out.value = value_head_.forward(g, obs);
  if (config_.arch == PolicyArch::kMlp) {
    out.mean = trunk_.forward(g, obs);
    return out;
  }

  std::vector<Var> features;
  features.reserve(config_.experts);
  for (auto& expert : experts_) features.push_back(expert.forward(g, obs));
  Var u = g.concat_cols(features);
  Var v = (config_.arch == PolicyArch::kOmoe)
              ? g.gram_schmidt(u, config_.experts, config_.feature_dim)
              : u;
  Var alpha = g.softmax_rows(router_.forward(g, obs));

  const int d = config_.feature_dim;
  Var mixed;
  for (int i = 0; i < config_.experts; ++i) {
    Var vi = g.slice_cols(v, i * d, (i + 1) * d);
    Var wi = g.mul_col(vi, g.slice_cols(alpha, i, i + 1));
    mixed = (i == 0) ? wi : g.add(mixed, wi);
  }
  out.mean = head_.forward(g, mixed);
  out.alpha = alpha;
  out.features = v;
  return out;
}

OmoePolicy::ActResult OmoePolicy::act(const Mat& obs, bool diagnostics) {
  Graph g;
  Var x = g.input(obs);
  PolicyForward fwd = forward(g, x);
  ActResult r;
  r.mean = g.value(fwd.mean);
  r.value = g.value(fwd.value);
  if (diagnostics && fwd.alpha.valid()) {
    r.alpha = g.value(fwd.alpha);
    r.features = g.value(fwd.features);
  }
  r.gs_fallbacks = g.gs_fallbacks();
  return r;
}

Mat OmoePolicy::clamped_log_std() const {
  Mat ls = log_std_.value;
  for (double& v : ls.v) v = std::clamp(v, -5.0, 1.0);
  return ls;
}

std::vector<Param*> OmoePolicy::params() {
  std::vector<Param*> out;
  auto append = [&](std::vector<Param*> ps) {
    out.insert(out.end(), ps.begin(), ps.end());
  };
  if (config_.arch == PolicyArch::kMlp) {
    append(trunk_.params());
  } else {
    for (auto& e : experts_) append(e.params());
    append(router_.params());
    append(head_.params());
  }
  append(value_head_.params());
  out.push_back(&log_std_);
  return out;
}

long OmoePolicy::param_count() {
  long n = 0;
  for (Param* p : params()) n += static_cast<long>(p->value.size());
  return n;
}

ActionSample sample_action(const double* mean, const double* log_std, int dim,
                           Rng& rng) {
  ActionSample s;
  s.action.resize(dim);
  s.log_prob = 0.0;
  constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
  for (int i = 0; i < dim; ++i) {
    const double ls = std::clamp(log_std[i], -5.0, 1.0);
    const double xi = rng.gaussian();
    s.action[i] = mean[i] + std::exp(ls) * xi;
    s.log_prob += -0.5 * xi * xi - ls - 0.5 * kLog2Pi;
  }
  return s;
}

double gaussian_log_prob(const double* mean, const double* log_std,
                         const double* action, int dim) {
  double lp = 0.0;
  constexpr double kLog2Pi = 1.8378770664093453;
  for (int i = 0; i < dim; ++i) {
    const double ls = std::clamp(log_std[i], -5.0, 1.0);
    const double z = (action[i] - mean[i]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
  }
  return lp;
}

Var gaussian_log_prob_graph(Graph& g, Var mean, Var log_std, Var actions) {
  constexpr double kLog2Pi = 1.8378770664093453;
  Var ls = g.clamp(log_std, -5.0, 1.0);                   // (1, D)
  Var inv_sigma = g.exp_(g.scale(ls, -1.0));              // (1, D)
  Var z = g.mul_row(g.sub(actions, mean), inv_sigma);     // (B, D)
  Var per = g.add_row(g.scale(g.square(z), -0.5), g.scale(ls, -1.0));
  per = g.add_const(per, -0.5 * kLog2Pi);
  return g.sum_rows(per);
}

Var gaussian_entropy_graph(Graph& g, Var log_std, int action_dim) {
  constexpr double kLog2Pi = 1.8378770664093453;
  Var ls = g.clamp(log_std, -5.0, 1.0);
  return g.add_const(g.sum_rows(ls), 0.5 * action_dim * (1.0 + kLog2Pi));
}

void size_mlp_to_match(PolicyConfig& cfg) {
  auto stack_count = [](int in, const std::vector<int>& hidden, int out) {
    long n = 0;
    int prev = in;
    for (int h : hidden) {
      n += static_cast<long>(prev) * h + h;
      prev = h;
    }
    n += static_cast<long>(prev) * out + out;
    return n;
  };
  const long omoe_total =
      cfg.experts * stack_count(cfg.obs_dim, cfg.expert_hidden, cfg.feature_dim) +
      stack_count(cfg.obs_dim, cfg.router_hidden, cfg.experts) +
      stack_count(cfg.feature_dim, cfg.head_hidden, cfg.action_dim);

  // Two equal hidden layers; pick the width whose trunk count lands closest.
  int best_h = 8;
  long best_err = std::numeric_limits<long>::max();
  for (int h = 8; h <= 2048; ++h) {
    const long count = stack_count(cfg.obs_dim, {h, h}, cfg.action_dim);
    const long err = std::labs(count - omoe_total);
    if (err < best_err) {
      best_err = err;
      best_h = h;
    } else if (count > omoe_total) {
      break;
    }
  }
  cfg.mlp_hidden = {best_h, best_h};
}

}  // namespace tracklab
