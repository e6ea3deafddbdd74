#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "segloc/nn/tensor.hpp"

namespace segloc::nn {

enum class Mode { train, eval };

enum class LayerKind : std::uint32_t {
  conv3d = 1,
  deconv3d = 2,
  maxpool3d = 3,
  dense = 4,
  relu = 5,
  sigmoid = 6,
  batchnorm = 7,
  dropout = 8,
  concat_scale = 9,
  flatten = 10,
  reshape = 11,
};

const char* kind_name(LayerKind kind);

/// One named array of a layer. Non-trainable params (running statistics) are
/// serialized but skipped by the optimizer.
struct Param {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;

  Param(std::string n, Shape s, bool train = true)
      : name(std::move(n)), shape(std::move(s)), value(volume(shape), 0.0), grad(volume(shape), 0.0), trainable(train) {}
};

/// Uniform draws in +-sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual std::string name() const { return kind_name(kind()); }
  /// Per-sample output shape; throws std::invalid_argument on a mismatch.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  /// Accumulates parameter gradients and returns the input gradient. Requires a
  /// preceding train-mode forward.
  virtual Tensor backward(const Tensor& grad) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void init(std::mt19937_64& /*rng*/) {}

 protected:
  void require_cache() const;
  bool cached_ = false;
};

class Conv3d : public Layer {
 public:
  Conv3d(int in_channels, int out_channels);
  LayerKind kind() const override { return LayerKind::conv3d; }
  std::string name() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(std::mt19937_64& rng) override;

 private:
  int cin_, cout_;
  Param weight_, bias_;  // [cout, cin, 3, 3, 3], [cout]
  Tensor input_;
};

/// Stride-2 transposed 3x3x3 convolution; doubles every spatial dimension.
class Deconv3d : public Layer {
 public:
  Deconv3d(int in_channels, int out_channels);
  LayerKind kind() const override { return LayerKind::deconv3d; }
  std::string name() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(std::mt19937_64& rng) override;

 private:
  int cin_, cout_;
  Param weight_, bias_;  // [cin, cout, 3, 3, 3], [cout]
  Tensor input_;
};

/// 2x2x2 max pooling, stride 2.
class MaxPool3d : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::maxpool3d; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

class Dense : public Layer {
 public:
  Dense(int in, int out);
  LayerKind kind() const override { return LayerKind::dense; }
  std::string name() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(std::mt19937_64& rng) override;
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_, out_;
  Param weight_, bias_;  // [out, in], [out]
  Tensor input_;
};

class Relu : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Tensor output_;
};

class Sigmoid : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::sigmoid; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Tensor output_;
};

/// Per-channel normalisation over batch and spatial positions (dimension 1 is
/// the channel). Eval mode uses bias-corrected running statistics.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int channels, double momentum = 0.99, double eps = 1e-5);
  LayerKind kind() const override { return LayerKind::batchnorm; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_, &running_mean_, &running_var_, &updates_}; }
  void init(std::mt19937_64& rng) override;

 private:
  int channels_;
  double momentum_, eps_;
  Param gamma_, beta_, running_mean_, running_var_, updates_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

/// Inverted dropout: survivors are scaled by 1/(1-ratio) at train time.
class Dropout : public Layer {
 public:
  explicit Dropout(double ratio, std::uint64_t seed = 0);
  LayerKind kind() const override { return LayerKind::dropout; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  double ratio() const { return ratio_; }

 private:
  double ratio_;
  std::mt19937_64 rng_;
  std::vector<double> mask_;
};

/// Appends a per-sample side vector (the segment scale) to a flat input.
class ConcatScale : public Layer {
 public:
  explicit ConcatScale(int width = 3) : width_(width) {}
  LayerKind kind() const override { return LayerKind::concat_scale; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void set_side(Tensor side) { side_ = std::move(side); }

 private:
  int width_;
  Tensor side_;
  int in_features_ = 0;
};

class Flatten : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::flatten; }
  Shape output_shape(const Shape& in) const override { return {static_cast<int>(volume(in))}; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Shape in_shape_;
};

class Reshape : public Layer {
 public:
  explicit Reshape(Shape target) : target_(std::move(target)) {}
  LayerKind kind() const override { return LayerKind::reshape; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Shape target_;
  Shape in_shape_;
};

/// Layers applied in order.
class Sequential {
 public:
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  /// Propagates a per-sample shape through every layer; errors name the layer.
  Shape output_shape(const Shape& in) const;
  /// Throws std::runtime_error naming the first layer that produces a non-finite value.
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& grad);
  std::vector<Param*> params();
  void zero_grad();
  void init(std::mt19937_64& rng);
  /// Reseeds every dropout layer (seed + layer position).
  void reseed_dropout(std::uint64_t seed);

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace segloc::nn
