#include "segloc/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segloc::nn {

namespace {
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;
}  // namespace

Tensor softmax(const Tensor& logits) {
  if (logits.shape.size() != 2) throw std::invalid_argument("softmax: expected [N,K] logits");
  Tensor p = logits;
  const int k = logits.shape[1];
  for (int n = 0; n < logits.batch(); ++n) {
    double* row = p.sample(n);
    const double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += row[i] = std::exp(row[i] - mx);
    for (int i = 0; i < k; ++i) row[i] /= sum;
  }
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.shape.size() != 2 || labels.size() != static_cast<std::size_t>(logits.batch()))
    throw std::invalid_argument("softmax_cross_entropy: logits/labels mismatch");
  if (!logits.all_finite()) throw std::invalid_argument("softmax_cross_entropy: non-finite logits");
  const int k = logits.shape[1];
  const double inv_n = 1.0 / logits.batch();
  LossResult r{0.0, softmax(logits)};
  for (int n = 0; n < logits.batch(); ++n) {
    const int y = labels[n];
    if (y < 0 || y >= k) throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const double* z = logits.sample(n);
    const double mx = *std::max_element(z, z + k);
    double lse = 0.0;
    for (int i = 0; i < k; ++i) lse += std::exp(z[i] - mx);
    r.value += (std::log(lse) + mx - z[y]) * inv_n;
    double* g = r.grad.sample(n);
    g[y] -= 1.0;
    for (int i = 0; i < k; ++i) g[i] *= inv_n;
  }
  return r;
}

LossResult weighted_bce(const Tensor& output, const Tensor& target, double gamma, bool per_element) {
  if (output.shape != target.shape) throw std::invalid_argument("weighted_bce: shape mismatch");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("weighted_bce: gamma must be in (0,1)");
  const double per_sample = per_element ? 1.0 / static_cast<double>(output.sample_size()) : 1.0;
  const double scale = per_sample / output.batch();
  LossResult r{0.0, Tensor(output.shape)};
  double total = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double t = target.data[i];
    if (t != 0.0 && t != 1.0) throw std::invalid_argument("weighted_bce: targets must be binary");
    const double raw = output.data[i];
    const double o = std::clamp(raw, kClampLo, kClampHi);
    const bool clamped = raw != o;
    if (t == 1.0) {
      total -= gamma * std::log(o);
      if (!clamped) r.grad.data[i] = -gamma / o * scale;
    } else {
      total -= (1.0 - gamma) * std::log(1.0 - o);
      if (!clamped) r.grad.data[i] = (1.0 - gamma) / (1.0 - o) * scale;
    }
  }
  r.value = total * scale;
  return r;
}

}  // namespace segloc::nn
