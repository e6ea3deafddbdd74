#include "segloc/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace segloc::nn {

std::size_t volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(volume(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != volume(shape))
    throw std::invalid_argument("tensor: " + std::to_string(data.size()) + " values for shape " + shape_string(shape));
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Tensor stack(const std::vector<const std::vector<double>*>& samples, const Shape& sample_shape) {
  Shape shape{static_cast<int>(samples.size())};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  Tensor t(shape);
  const std::size_t n = volume(sample_shape);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i]->size() != n) throw std::invalid_argument("stack: sample size mismatch");
    std::copy(samples[i]->begin(), samples[i]->end(), t.data.begin() + i * n);
  }
  return t;
}

}  // namespace segloc::nn
