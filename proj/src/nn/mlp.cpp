#include "tracklab/nn/mlp.hpp"

#include <cmath>

namespace tracklab {

Mlp::Mlp(const std::string& name, int in_dim, const std::vector<int>& hidden,
         int out_dim, Rng& rng, double final_init_scale)
    : in_dim_(in_dim), out_dim_(out_dim) {
  widths_.push_back(in_dim);
  for (int h : hidden) widths_.push_back(h);
  widths_.push_back(out_dim);
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    double stddev = std::sqrt(2.0 / fan_in);
    if (l + 2 == widths_.size()) stddev *= final_init_scale;
    weights_.emplace_back(name + ".w" + std::to_string(l),
                          Mat::randn(fan_in, fan_out, stddev, rng));
    biases_.emplace_back(name + ".b" + std::to_string(l), Mat(1, fan_out));
  }
}

Var Mlp::forward(Graph& g, Var x) {
  Var h = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    h = g.add_row(g.matmul(h, g.param(weights_[l])), g.param(biases_[l]));
    if (l + 1 < weights_.size()) h = g.elu(h);
  }
  return h;
}

std::vector<float> Mlp::forward_f32(const std::vector<float>& x) const {
  std::vector<float> act(x);
  for (size_t l = 0; l < weights_.size(); ++l) {
    const Mat& W = weights_[l].value;
    const Mat& b = biases_[l].value;
    std::vector<float> next(static_cast<size_t>(W.cols));
    for (int j = 0; j < W.cols; ++j) next[j] = static_cast<float>(b.at(0, j));
    for (int k = 0; k < W.rows; ++k) {
      const float a = act[k];
      for (int j = 0; j < W.cols; ++j) {
        next[j] += a * static_cast<float>(W.at(k, j));
      }
    }
    if (l + 1 < weights_.size()) {
      for (float& v : next) v = v > 0.f ? v : std::expm1(v);
    }
    act = std::move(next);
  }
  return act;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

long Mlp::param_count() const {
  long n = 0;
  for (const auto& w : weights_) n += static_cast<long>(w.value.size());
  for (const auto& b : biases_) n += static_cast<long>(b.value.size());
  return n;
}

}  // namespace tracklab
