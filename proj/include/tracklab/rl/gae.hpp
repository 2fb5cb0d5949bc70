#pragma once

#include "tracklab/rl/rollout.hpp"

namespace tracklab {

struct GaeResult {
  std::vector<double> advantages;  // (N*T), raw
  std::vector<double> returns;     // advantages + values
};

// Standard recursive generalized advantage estimation over the batch; done
// flags cut trajectories, the final step bootstraps from
// batch.bootstrap_values.
GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda);

// Normalizes in place to mean 0 / std 1 (batch-wide).
void normalize_advantages(std::vector<double>& advantages);

}  // namespace tracklab
