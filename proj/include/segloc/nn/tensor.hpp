#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace segloc::nn {

using Shape = std::vector<int>;

std::size_t volume(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array; dimension 0 is the batch.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  int batch() const { return shape.empty() ? 0 : shape[0]; }
  Shape sample_shape() const { return Shape(shape.begin() + (shape.empty() ? 0 : 1), shape.end()); }
  std::size_t sample_size() const { return batch() ? data.size() / batch() : 0; }
  double* sample(int n) { return data.data() + n * sample_size(); }
  const double* sample(int n) const { return data.data() + n * sample_size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  bool all_finite() const;
};

/// Stacks equally shaped samples into one batch.
Tensor stack(const std::vector<const std::vector<double>*>& samples, const Shape& sample_shape);

}  // namespace segloc::nn
