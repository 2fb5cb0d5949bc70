#include "tracklab/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tracklab {

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

double Adam::step(double max_grad_norm) {
  double norm2 = 0.0;
  for (Param* p : params_) {
    for (double g : p->grad.v) norm2 += g * g;
  }
  const double norm = std::sqrt(norm2);
  double scale = 1.0;
  if (max_grad_norm > 0.0 && norm > max_grad_norm) scale = max_grad_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (size_t k = 0; k < p->value.size(); ++k) {
      const double g = p->grad.v[k] * scale;
      m_[i].v[k] = beta1_ * m_[i].v[k] + (1.0 - beta1_) * g;
      v_[i].v[k] = beta2_ * v_[i].v[k] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i].v[k] / bc1;
      const double vhat = v_[i].v[k] / bc2;
      p->value.v[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
  return norm;
}

void Adam::save_state(std::vector<double>& out) const {
  out.clear();
  out.push_back(static_cast<double>(t_));
  out.push_back(lr_);
  for (size_t i = 0; i < m_.size(); ++i) {
    out.insert(out.end(), m_[i].v.begin(), m_[i].v.end());
    out.insert(out.end(), v_[i].v.begin(), v_[i].v.end());
  }
}

void Adam::load_state(const std::vector<double>& in) {
  size_t pos = 0;
  if (in.size() < 2) throw std::invalid_argument("adam state too short");
  t_ = static_cast<long>(in[pos++]);
  lr_ = in[pos++];
  for (size_t i = 0; i < m_.size(); ++i) {
    for (double& x : m_[i].v) x = in.at(pos++);
    for (double& x : v_[i].v) x = in.at(pos++);
  }
  if (pos != in.size()) throw std::invalid_argument("adam state size mismatch");
}

}  // namespace tracklab
