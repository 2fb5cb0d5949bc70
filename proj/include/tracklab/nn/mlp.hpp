#pragma once

#include <string>
#include <vector>

#include "tracklab/nn/graph.hpp"

namespace tracklab {

// Dense stack with ELU on hidden layers and a linear output.
class Mlp {
 public:
  Mlp() = default;
  // final_init_scale shrinks the output layer's init (small heads keep the
  // untrained net near zero output, which PPO and the regression tests rely
  // on).
  Mlp(const std::string& name, int in_dim, const std::vector<int>& hidden,
      int out_dim, Rng& rng, double final_init_scale = 1.0);

  // Non-const: the graph binds parameter storage for gradient accumulation.
  Var forward(Graph& g, Var x);

  // 32-bit inference path for deployment-style use; weights are cast on the
  // fly, activations accumulate in float.
  std::vector<float> forward_f32(const std::vector<float>& x) const;

  std::vector<Param*> params();
  long param_count() const;
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::vector<int>& widths() const { return widths_; }  // in, hidden..., out

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  std::vector<int> widths_;
  std::vector<Param> weights_;
  std::vector<Param> biases_;
};

}  // namespace tracklab
