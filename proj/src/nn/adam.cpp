#include "segloc/nn/adam.hpp"

#include <algorithm>
#include <cmath>

namespace segloc::nn {

Adam::Adam(std::vector<Param*> params, AdamConfig config) : config_(config) {
  for (Param* p : params)
    if (p->trainable) params_.push_back(p);
  for (Param* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

bool Adam::step() {
  for (const Param* p : params_)
    for (double g : p->grad)
      if (!std::isfinite(g)) {
        ++skipped_;
        return false;
      }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      p.value[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (Param* p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

}  // namespace segloc::nn
