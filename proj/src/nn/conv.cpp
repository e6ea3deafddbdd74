#include <Eigen/Core>
#include <stdexcept>

#include "segloc/nn/layers.hpp"

namespace segloc::nn {

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

constexpr int kTaps = 27;

// cols[(c*27 + tap), g] = vol[c, g*stride - 1 + offset(tap)], zero outside the volume.
void im2col(const double* vol, int channels, const int* vd, const int* gd, int stride, double* cols) {
  const int gp = gd[0] * gd[1] * gd[2];
  const int vp = vd[0] * vd[1] * vd[2];
  for (int c = 0; c < channels; ++c) {
    const double* src = vol + static_cast<std::size_t>(c) * vp;
    for (int kd = 0; kd < 3; ++kd)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          double* row = cols + static_cast<std::size_t>(c * kTaps + kd * 9 + kh * 3 + kw) * gp;
          for (int a = 0; a < gd[0]; ++a) {
            const int i = a * stride - 1 + kd;
            for (int b = 0; b < gd[1]; ++b) {
              const int j = b * stride - 1 + kh;
              double* out = row + (a * gd[1] + b) * gd[2];
              if (i < 0 || i >= vd[0] || j < 0 || j >= vd[1]) {
                for (int e = 0; e < gd[2]; ++e) out[e] = 0.0;
                continue;
              }
              const double* line = src + (i * vd[1] + j) * vd[2];
              for (int e = 0; e < gd[2]; ++e) {
                const int k = e * stride - 1 + kw;
                out[e] = (k >= 0 && k < vd[2]) ? line[k] : 0.0;
              }
            }
          }
        }
  }
}

// Adjoint of im2col: scatters and accumulates columns back into the volume.
void col2im(const double* cols, int channels, const int* vd, const int* gd, int stride, double* vol) {
  const int gp = gd[0] * gd[1] * gd[2];
  const int vp = vd[0] * vd[1] * vd[2];
  for (int c = 0; c < channels; ++c) {
    double* dst = vol + static_cast<std::size_t>(c) * vp;
    for (int kd = 0; kd < 3; ++kd)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          const double* row = cols + static_cast<std::size_t>(c * kTaps + kd * 9 + kh * 3 + kw) * gp;
          for (int a = 0; a < gd[0]; ++a) {
            const int i = a * stride - 1 + kd;
            if (i < 0 || i >= vd[0]) continue;
            for (int b = 0; b < gd[1]; ++b) {
              const int j = b * stride - 1 + kh;
              if (j < 0 || j >= vd[1]) continue;
              const double* in = row + (a * gd[1] + b) * gd[2];
              double* line = dst + (i * vd[1] + j) * vd[2];
              for (int e = 0; e < gd[2]; ++e) {
                const int k = e * stride - 1 + kw;
                if (k >= 0 && k < vd[2]) line[k] += in[e];
              }
            }
          }
        }
  }
}

void check_volume(const Shape& in, int channels, const std::string& who) {
  if (in.size() != 4 || in[0] != channels)
    throw std::invalid_argument(who + ": expected [" + std::to_string(channels) + ",D,H,W], got " + shape_string(in));
}

}  // namespace

Conv3d::Conv3d(int in_channels, int out_channels)
    : cin_(in_channels),
      cout_(out_channels),
      weight_("weight", {out_channels, in_channels, 3, 3, 3}),
      bias_("bias", {out_channels}) {}

std::string Conv3d::name() const { return "conv3d(" + std::to_string(cin_) + "->" + std::to_string(cout_) + ")"; }

Shape Conv3d::output_shape(const Shape& in) const {
  check_volume(in, cin_, name());
  return {cout_, in[1], in[2], in[3]};
}

void Conv3d::init(std::mt19937_64& rng) {
  xavier_uniform(weight_.value, static_cast<std::size_t>(cin_) * kTaps, static_cast<std::size_t>(cout_) * kTaps, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Conv3d::forward(const Tensor& x, Mode mode) {
  const Shape out = output_shape(x.sample_shape());
  const int dims[3] = {x.shape[2], x.shape[3], x.shape[4]};
  const int p = dims[0] * dims[1] * dims[2];
  Tensor y({x.batch(), out[0], out[1], out[2], out[3]});
  std::vector<double> cols(static_cast<std::size_t>(cin_) * kTaps * p);
  const CMapR w(weight_.value.data(), cout_, cin_ * kTaps);
  const Eigen::Map<const Eigen::VectorXd> b(bias_.value.data(), cout_);
  for (int n = 0; n < x.batch(); ++n) {
    im2col(x.sample(n), cin_, dims, dims, 1, cols.data());
    MapR yn(y.sample(n), cout_, p);
    yn.noalias() = w * CMapR(cols.data(), cin_ * kTaps, p);
    yn.colwise() += b;
  }
  cached_ = mode == Mode::train;
  if (cached_) input_ = x;
  return y;
}

Tensor Conv3d::backward(const Tensor& grad) {
  require_cache();
  const Tensor& x = input_;
  const int dims[3] = {x.shape[2], x.shape[3], x.shape[4]};
  const int p = dims[0] * dims[1] * dims[2];
  Tensor gx(x.shape);
  std::vector<double> cols(static_cast<std::size_t>(cin_) * kTaps * p);
  const CMapR w(weight_.value.data(), cout_, cin_ * kTaps);
  MapR gw(weight_.grad.data(), cout_, cin_ * kTaps);
  for (int n = 0; n < x.batch(); ++n) {
    const CMapR gn(grad.sample(n), cout_, p);
    im2col(x.sample(n), cin_, dims, dims, 1, cols.data());
    gw.noalias() += gn * CMapR(cols.data(), cin_ * kTaps, p).transpose();
    for (int c = 0; c < cout_; ++c) {
      const double* row = grad.sample(n) + static_cast<std::size_t>(c) * p;
      double acc = 0.0;
      for (int i = 0; i < p; ++i) acc += row[i];
      bias_.grad[c] += acc;
    }
    MapR(cols.data(), cin_ * kTaps, p).noalias() = w.transpose() * gn;
    col2im(cols.data(), cin_, dims, dims, 1, gx.sample(n));
  }
  return gx;
}

Deconv3d::Deconv3d(int in_channels, int out_channels)
    : cin_(in_channels),
      cout_(out_channels),
      weight_("weight", {in_channels, out_channels, 3, 3, 3}),
      bias_("bias", {out_channels}) {}

std::string Deconv3d::name() const { return "deconv3d(" + std::to_string(cin_) + "->" + std::to_string(cout_) + ")"; }

Shape Deconv3d::output_shape(const Shape& in) const {
  check_volume(in, cin_, name());
  return {cout_, 2 * in[1], 2 * in[2], 2 * in[3]};
}

void Deconv3d::init(std::mt19937_64& rng) {
  xavier_uniform(weight_.value, static_cast<std::size_t>(cin_) * kTaps, static_cast<std::size_t>(cout_) * kTaps, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Deconv3d::forward(const Tensor& x, Mode mode) {
  const Shape out = output_shape(x.sample_shape());
  const int gdims[3] = {x.shape[2], x.shape[3], x.shape[4]};
  const int vdims[3] = {out[1], out[2], out[3]};
  const int gp = gdims[0] * gdims[1] * gdims[2];
  const int vp = vdims[0] * vdims[1] * vdims[2];
  Tensor y({x.batch(), out[0], out[1], out[2], out[3]});
  std::vector<double> cols(static_cast<std::size_t>(cout_) * kTaps * gp);
  const CMapR w(weight_.value.data(), cin_, cout_ * kTaps);
  for (int n = 0; n < x.batch(); ++n) {
    MapR(cols.data(), cout_ * kTaps, gp).noalias() = w.transpose() * CMapR(x.sample(n), cin_, gp);
    col2im(cols.data(), cout_, vdims, gdims, 2, y.sample(n));
    MapR yn(y.sample(n), cout_, vp);
    yn.colwise() += Eigen::Map<const Eigen::VectorXd>(bias_.value.data(), cout_);
  }
  cached_ = mode == Mode::train;
  if (cached_) input_ = x;
  return y;
}

Tensor Deconv3d::backward(const Tensor& grad) {
  require_cache();
  const Tensor& x = input_;
  const int gdims[3] = {x.shape[2], x.shape[3], x.shape[4]};
  const int vdims[3] = {grad.shape[2], grad.shape[3], grad.shape[4]};
  const int gp = gdims[0] * gdims[1] * gdims[2];
  const int vp = vdims[0] * vdims[1] * vdims[2];
  Tensor gx(x.shape);
  std::vector<double> cols(static_cast<std::size_t>(cout_) * kTaps * gp);
  const CMapR w(weight_.value.data(), cin_, cout_ * kTaps);
  MapR gw(weight_.grad.data(), cin_, cout_ * kTaps);
  for (int n = 0; n < x.batch(); ++n) {
    for (int c = 0; c < cout_; ++c) {
      const double* row = grad.sample(n) + static_cast<std::size_t>(c) * vp;
      double acc = 0.0;
      for (int i = 0; i < vp; ++i) acc += row[i];
      bias_.grad[c] += acc;
    }
    im2col(grad.sample(n), cout_, vdims, gdims, 2, cols.data());
    const CMapR gc(cols.data(), cout_ * kTaps, gp);
    const CMapR xn(x.sample(n), cin_, gp);
    gw.noalias() += xn * gc.transpose();
    MapR(gx.sample(n), cin_, gp).noalias() = w * gc;
  }
  return gx;
}

Shape MaxPool3d::output_shape(const Shape& in) const {
  if (in.size() != 4 || in[1] % 2 || in[2] % 2 || in[3] % 2)
    throw std::invalid_argument("maxpool3d: expected [C,D,H,W] with even spatial dims, got " + shape_string(in));
  return {in[0], in[1] / 2, in[2] / 2, in[3] / 2};
}

Tensor MaxPool3d::forward(const Tensor& x, Mode mode) {
  const Shape out = output_shape(x.sample_shape());
  Tensor y({x.batch(), out[0], out[1], out[2], out[3]});
  const int D = x.shape[2], H = x.shape[3], W = x.shape[4];
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < out[0]; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * out[0] + c) * D * H * W;
      for (int a = 0; a < out[1]; ++a)
        for (int b = 0; b < out[2]; ++b)
          for (int e = 0; e < out[3]; ++e, ++o) {
            std::size_t best = base + ((2 * a) * H + 2 * b) * W + 2 * e;
            for (int da = 0; da < 2; ++da)
              for (int db = 0; db < 2; ++db)
                for (int de = 0; de < 2; ++de) {
                  const std::size_t idx = base + ((2 * a + da) * H + 2 * b + db) * W + 2 * e + de;
                  if (x.data[idx] > x.data[best]) best = idx;
                }
            y.data[o] = x.data[best];
            argmax_[o] = best;
          }
    }
  cached_ = mode == Mode::train;
  in_shape_ = x.shape;
  return y;
}

Tensor MaxPool3d::backward(const Tensor& grad) {
  require_cache();
  Tensor gx(in_shape_);
  for (std::size_t o = 0; o < grad.size(); ++o) gx.data[argmax_[o]] += grad.data[o];
  return gx;
}

}  // namespace segloc::nn
