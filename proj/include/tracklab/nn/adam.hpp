#pragma once

#include <vector>

#include "tracklab/nn/graph.hpp"

namespace tracklab {

// Standard Adam with global-norm gradient clipping.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::vector<Param*> params, double lr = 3e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  // Clips the global gradient norm to max_grad_norm (0 disables), then takes
  // one Adam step. Returns the pre-clip global norm.
  double step(double max_grad_norm = 1.0);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long step_count() const { return t_; }

  // Moment serialization for bit-exact training resume.
  void save_state(std::vector<double>& out) const;
  void load_state(const std::vector<double>& in);

 private:
  std::vector<Param*> params_;
  std::vector<Mat> m_, v_;
  double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

}  // namespace tracklab
