#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tracklab/nn/mlp.hpp"

namespace tracklab {

enum class PolicyArch { kOmoe, kMoe, kMlp };

PolicyArch parse_policy_arch(const std::string& name);
std::string policy_arch_name(PolicyArch arch);

struct PolicyConfig {
  int obs_dim = 0;          // concatenated (state, goal) width
  int action_dim = 10;
  PolicyArch arch = PolicyArch::kOmoe;
  int experts = 4;
  int feature_dim = 64;     // d; must be >= experts
  std::vector<int> expert_hidden{128};
  std::vector<int> router_hidden{64};
  std::vector<int> head_hidden{64};
  std::vector<int> value_hidden{128, 64};
  std::vector<int> mlp_hidden{};  // parameter-matched trunk; sized on demand
  double init_log_std = -1.6;

  // Architecture string; hashed in checkpoints and parseable back, so a
  // checkpoint is self-describing.
  std::string describe() const;
  static PolicyConfig parse_describe(const std::string& desc);
  void validate() const;
};

struct PolicyForward {
  Var mean;
  Var value;
  Var alpha;     // router weights (B, M); invalid for the mlp arch
  Var features;  // orthogonalized features (B, M*d); invalid for mlp
};

// Mixture-of-experts policy whose expert features are orthogonalized by a
// differentiable Gram-Schmidt pass before the router-weighted combination.
// kMoe skips the orthogonalization, kMlp is a parameter-matched plain trunk;
// both exist for the ablation harness.
class OmoePolicy {
 public:
  OmoePolicy() = default;
  OmoePolicy(const PolicyConfig& config, uint64_t seed);

  const PolicyConfig& config() const { return config_; }

  PolicyForward forward(Graph& g, Var obs);

  // Convenience inference: builds a scratch graph.
  struct ActResult {
    Mat mean;
    Mat value;
    Mat alpha;
    Mat features;
    long gs_fallbacks = 0;
  };
  ActResult act(const Mat& obs, bool diagnostics = false);

  Param& log_std() { return log_std_; }
  Mat clamped_log_std() const;  // log-std clamped to [-5, 1]

  std::vector<Param*> params();
  long param_count();

 private:
  PolicyConfig config_;
  std::vector<Mlp> experts_;
  Mlp router_;
  Mlp head_;
  Mlp value_head_;
  Mlp trunk_;  // mlp arch only
  Param log_std_;
};

// Diagonal Gaussian sample and its exact log density under the clamped
// distribution. log_std is clamped to [-5, 1] before use.
struct ActionSample {
  std::vector<double> action;
  double log_prob;
};
ActionSample sample_action(const double* mean, const double* log_std, int dim,
                           Rng& rng);
double gaussian_log_prob(const double* mean, const double* log_std,
                         const double* action, int dim);

// Sizes cfg.mlp_hidden (two hidden layers) so the kMlp trunk's total
// parameter count matches the kOmoe architecture within 2%.
void size_mlp_to_match(PolicyConfig& cfg);

// In-graph diagonal Gaussian log density (clamped log-std), (B,1) output.
// Used by the PPO surrogate and the gradient test suite.
Var gaussian_log_prob_graph(Graph& g, Var mean, Var log_std, Var actions);

// In-graph entropy of the clamped diagonal Gaussian, (1,1).
Var gaussian_entropy_graph(Graph& g, Var log_std, int action_dim);

}  // namespace tracklab
