#pragma once

#include <vector>

#include "segloc/nn/tensor.hpp"

namespace segloc::nn {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d input
};

/// Row-wise softmax with the row maximum subtracted.
Tensor softmax(const Tensor& logits);

/// Mean over the batch of -log softmax(logits)[label].
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Class-weighted binary cross entropy summed over every element of a sample and
/// averaged over the batch. Outputs are clamped to [1e-7, 1 - 1e-7]. Targets must
/// be 0 or 1. With `per_element` the per-sample sum is divided by the element count.
LossResult weighted_bce(const Tensor& output, const Tensor& target, double gamma, bool per_element = false);

inline double combined_loss(double classification, double reconstruction, double alpha) {
  return classification + alpha * reconstruction;
}

}  // namespace segloc::nn
