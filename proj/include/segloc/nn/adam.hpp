#pragma once

#include <cstddef>
#include <vector>

#include "segloc/nn/layers.hpp"

namespace segloc::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM over the trainable params it was built with.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig config = {});

  /// Applies one update from the accumulated gradients. Returns false and leaves
  /// everything untouched when any gradient is non-finite.
  bool step();
  void zero_grad();

  std::size_t steps() const { return t_; }
  std::size_t skipped_steps() const { return skipped_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  std::vector<Param*> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
  std::size_t skipped_ = 0;
};

}  // namespace segloc::nn
