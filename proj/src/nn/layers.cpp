#include "segloc/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace segloc::nn {

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

Shape with_batch(int n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv3d: return "conv3d";
    case LayerKind::deconv3d: return "deconv3d";
    case LayerKind::maxpool3d: return "maxpool3d";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::concat_scale: return "concat_scale";
    case LayerKind::flatten: return "flatten";
    case LayerKind::reshape: return "reshape";
  }
  return "unknown";
}

void xavier_uniform(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : w) v = u(rng);
}

void Layer::require_cache() const {
  if (!cached_) throw std::logic_error(name() + ": backward without a train-mode forward");
}

Dense::Dense(int in, int out) : in_(in), out_(out), weight_("weight", {out, in}), bias_("bias", {out}) {}

std::string Dense::name() const { return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")"; }

Shape Dense::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_)
    throw std::invalid_argument(name() + ": expected [" + std::to_string(in_) + "], got " + shape_string(in));
  return {out_};
}

void Dense::init(std::mt19937_64& rng) {
  xavier_uniform(weight_.value, in_, out_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Dense::forward(const Tensor& x, Mode mode) {
  output_shape(x.sample_shape());
  Tensor y({x.batch(), out_});
  MapR ym(y.data.data(), x.batch(), out_);
  ym.noalias() = CMapR(x.data.data(), x.batch(), in_) * CMapR(weight_.value.data(), out_, in_).transpose();
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias_.value.data(), out_);
  cached_ = mode == Mode::train;
  if (cached_) input_ = x;
  return y;
}

Tensor Dense::backward(const Tensor& grad) {
  require_cache();
  const int n = input_.batch();
  const CMapR g(grad.data.data(), n, out_);
  MapR(weight_.grad.data(), out_, in_).noalias() += g.transpose() * CMapR(input_.data.data(), n, in_);
  for (int r = 0; r < n; ++r)
    for (int o = 0; o < out_; ++o) bias_.grad[o] += grad.data[static_cast<std::size_t>(r) * out_ + o];
  Tensor gx(input_.shape);
  MapR(gx.data.data(), n, in_).noalias() = g * CMapR(weight_.value.data(), out_, in_);
  return gx;
}

Tensor Relu::forward(const Tensor& x, Mode mode) {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  cached_ = mode == Mode::train;
  if (cached_) output_ = y;
  return y;
}

Tensor Relu::backward(const Tensor& grad) {
  require_cache();
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (output_.data[i] <= 0.0) g.data[i] = 0.0;
  return g;
}

Tensor Sigmoid::forward(const Tensor& x, Mode mode) {
  Tensor y = x;
  for (auto& v : y.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  cached_ = mode == Mode::train;
  if (cached_) output_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& grad) {
  require_cache();
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= output_.data[i] * (1.0 - output_.data[i]);
  return g;
}

BatchNorm::BatchNorm(int channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_("gamma", {channels}),
      beta_("beta", {channels}),
      running_mean_("running_mean", {channels}, false),
      running_var_("running_var", {channels}, false),
      updates_("updates", {1}, false) {
  std::mt19937_64 unused;
  init(unused);
}

Shape BatchNorm::output_shape(const Shape& in) const {
  if (in.empty() || in[0] != channels_)
    throw std::invalid_argument("batchnorm: expected " + std::to_string(channels_) + " channels, got " +
                                shape_string(in));
  return in;
}

void BatchNorm::init(std::mt19937_64&) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
  std::fill(beta_.value.begin(), beta_.value.end(), 0.0);
  std::fill(running_mean_.value.begin(), running_mean_.value.end(), 0.0);
  std::fill(running_var_.value.begin(), running_var_.value.end(), 0.0);
  updates_.value[0] = 0.0;
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  output_shape(x.sample_shape());
  const int n = x.batch();
  const std::size_t spatial = x.sample_size() / channels_;
  const double m = static_cast<double>(n) * spatial;
  Tensor y(x.shape);
  Tensor xhat(x.shape);
  inv_std_.assign(channels_, 0.0);
  if (mode == Mode::train) updates_.value[0] += 1.0;
  // Running averages start at zero; divide out the startup bias.
  const double debias = 1.0 - std::pow(momentum_, updates_.value[0]);
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = x.sample(b) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) s += p[i];
      }
      mean = s / m;
      double v = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = x.sample(b) + c * spatial;
        for (std::size_t i = 0; i < spatial; ++i) v += (p[i] - mean) * (p[i] - mean);
      }
      var = v / m;
      running_mean_.value[c] = momentum_ * running_mean_.value[c] + (1.0 - momentum_) * mean;
      running_var_.value[c] = momentum_ * running_var_.value[c] + (1.0 - momentum_) * var;
    } else {
      mean = debias > 0.0 ? running_mean_.value[c] / debias : 0.0;
      var = debias > 0.0 ? running_var_.value[c] / debias : 1.0;
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = b * x.sample_size() + c * spatial;
      for (std::size_t i = 0; i < spatial; ++i) {
        const double h = (x.data[off + i] - mean) * inv;
        xhat.data[off + i] = h;
        y.data[off + i] = gamma_.value[c] * h + beta_.value[c];
      }
    }
  }
  cached_ = mode == Mode::train;
  if (cached_) xhat_ = std::move(xhat);
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad) {
  require_cache();
  const int n = grad.batch();
  const std::size_t spatial = grad.sample_size() / channels_;
  const double m = static_cast<double>(n) * spatial;
  Tensor gx(grad.shape);
  for (int c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = b * grad.sample_size() + c * spatial;
      for (std::size_t i = 0; i < spatial; ++i) {
        sum_g += grad.data[off + i];
        sum_gx += grad.data[off + i] * xhat_.data[off + i];
      }
    }
    gamma_.grad[c] += sum_gx;
    beta_.grad[c] += sum_g;
    const double k = gamma_.value[c] * inv_std_[c] / m;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = b * grad.sample_size() + c * spatial;
      for (std::size_t i = 0; i < spatial; ++i)
        gx.data[off + i] = k * (m * grad.data[off + i] - sum_g - xhat_.data[off + i] * sum_gx);
    }
  }
  return gx;
}

Dropout::Dropout(double ratio, std::uint64_t seed) : ratio_(ratio), rng_(seed) {
  if (ratio < 0.0 || ratio >= 1.0) throw std::invalid_argument("dropout: ratio must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  cached_ = mode == Mode::train;
  if (mode == Mode::eval) return x;
  std::bernoulli_distribution drop(ratio_);
  const double scale = 1.0 / (1.0 - ratio_);
  mask_.resize(x.size());
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = drop(rng_) ? 0.0 : scale;
    y.data[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad) {
  require_cache();
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= mask_[i];
  return g;
}

Shape ConcatScale::output_shape(const Shape& in) const {
  if (in.size() != 1) throw std::invalid_argument("concat_scale: expected a flat input, got " + shape_string(in));
  return {in[0] + width_};
}

Tensor ConcatScale::forward(const Tensor& x, Mode mode) {
  const Shape out = output_shape(x.sample_shape());
  if (side_.shape != Shape{x.batch(), width_})
    throw std::invalid_argument("concat_scale: side input " + shape_string(side_.shape) + " does not match batch " +
                                std::to_string(x.batch()));
  in_features_ = x.shape[1];
  Tensor y({x.batch(), out[0]});
  for (int n = 0; n < x.batch(); ++n) {
    std::copy(x.sample(n), x.sample(n) + in_features_, y.sample(n));
    std::copy(side_.sample(n), side_.sample(n) + width_, y.sample(n) + in_features_);
  }
  cached_ = mode == Mode::train;
  return y;
}

Tensor ConcatScale::backward(const Tensor& grad) {
  require_cache();
  Tensor gx({grad.batch(), in_features_});
  for (int n = 0; n < grad.batch(); ++n) std::copy(grad.sample(n), grad.sample(n) + in_features_, gx.sample(n));
  return gx;
}

Tensor Flatten::forward(const Tensor& x, Mode mode) {
  in_shape_ = x.shape;
  cached_ = mode == Mode::train;
  return Tensor({x.batch(), static_cast<int>(x.sample_size())}, x.data);
}

Tensor Flatten::backward(const Tensor& grad) {
  require_cache();
  return Tensor(in_shape_, grad.data);
}

Shape Reshape::output_shape(const Shape& in) const {
  if (volume(in) != volume(target_))
    throw std::invalid_argument("reshape: cannot view " + shape_string(in) + " as " + shape_string(target_));
  return target_;
}

Tensor Reshape::forward(const Tensor& x, Mode mode) {
  output_shape(x.sample_shape());
  in_shape_ = x.shape;
  cached_ = mode == Mode::train;
  return Tensor(with_batch(x.batch(), target_), x.data);
}

Tensor Reshape::backward(const Tensor& grad) {
  require_cache();
  return Tensor(in_shape_, grad.data);
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape s = in;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = layers_[i]->output_shape(s);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("layer " + std::to_string(i) + " " + layers_[i]->name() + ": " + e.what());
    }
  }
  return s;
}

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      h = layers_[i]->forward(h, mode);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("layer " + std::to_string(i) + " " + layers_[i]->name() + ": " + e.what());
    }
    if (!h.all_finite())
      throw std::runtime_error("layer " + std::to_string(i) + " " + layers_[i]->name() + " produced non-finite values");
  }
  return h;
}

Tensor Sequential::backward(const Tensor& grad) {
  Tensor g = grad;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

void Sequential::zero_grad() {
  for (Param* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

void Sequential::init(std::mt19937_64& rng) {
  for (auto& l : layers_) l->init(rng);
}

void Sequential::reseed_dropout(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (auto* d = dynamic_cast<Dropout*>(layers_[i].get())) d->reseed(seed + i);
}

}  // namespace segloc::nn
