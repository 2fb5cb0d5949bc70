#include "tracklab/rl/gae.hpp"

#include <cmath>

namespace tracklab {

GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
  const int n = batch.num_envs;
  const int steps = batch.steps;
  GaeResult out;
  out.advantages.assign(static_cast<size_t>(n) * steps, 0.0);
  out.returns.assign(static_cast<size_t>(n) * steps, 0.0);

  for (int i = 0; i < n; ++i) {
    double gae = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      const int row = batch.at(t, i);
      const bool terminal = batch.dones[row] != 0;
      const double next_value =
          terminal ? 0.0
                   : (t == steps - 1 ? batch.bootstrap_values[i]
                                     : batch.values[batch.at(t + 1, i)]);
      const double delta =
          batch.rewards[row] + gamma * next_value - batch.values[row];
      gae = delta + gamma * lambda * (terminal ? 0.0 : gae);
      out.advantages[row] = gae;
      out.returns[row] = gae + batch.values[row];
    }
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(advantages.size());
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : advantages) a = (a - mean) * inv;
}

}  // namespace tracklab
