// SPDX-License-Identifier: Apache-2.0
//
// Hand-rolled differentiable building blocks. Every module caches what its
// backward pass needs during forward; call backward at most once per forward,
// before the next forward on the same module. Parameter gradients accumulate
// into Param::g until zeroed by the caller.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "reenc/nn/core.hpp"

namespace reenc::nn {

// 1x1 convolution across channels: (in x T) -> (out x T). With T=1 this is a
// plain dense layer; vectors are passed as one-column matrices throughout.
template <typename T>
class Pointwise {
 public:
  Pointwise(int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
    w.resize(out_dim, in_dim);
    b.resize(out_dim, 1);
  }

  void init(Rng& rng, double stddev) {
    fill_gauss(w.v, rng, stddev);
    b.v.setZero();
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != in_dim_) throw DimensionError("pointwise: expected " + std::to_string(in_dim_) + " input channels");
    x_ = x;
    Mat<T> y = w.v * x;
    y.colwise() += b.v.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    w.g += dy * x_.transpose();
    b.g.col(0) += dy.rowwise().sum();
    return w.v.transpose() * dy;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".weight", w, out);
    collect_param(prefix + ".bias", b, out);
  }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

  Param<T> w, b;

 private:
  int in_dim_, out_dim_;
  Mat<T> x_;
};

// Per-channel 1-D convolution with same-padding, odd kernel.
template <typename T>
class DepthwiseConv1d {
 public:
  DepthwiseConv1d(int channels, int kernel) : channels_(channels), kernel_(kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw ValueError("depthwise conv kernel must be odd");
    w.resize(channels, kernel);
    b.resize(channels, 1);
  }

  void init(Rng& rng, double stddev) {
    fill_gauss(w.v, rng, stddev);
    b.v.setZero();
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != channels_) throw DimensionError("depthwise conv: channel mismatch");
    x_ = x;
    const Eigen::Index frames = x.cols();
    const int pad = (kernel_ - 1) / 2;
    Mat<T> y = Mat<T>::Zero(channels_, frames);
    for (int k = 0; k < kernel_; ++k) {
      const Eigen::Index shift = k - pad;  // y(:,t) += w(:,k) .* x(:,t+shift)
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index t1 = std::min<Eigen::Index>(frames, frames - shift);
      if (t0 >= t1) continue;
      y.middleCols(t0, t1 - t0).array() +=
          x.middleCols(t0 + shift, t1 - t0).array().colwise() * w.v.col(k).array();
    }
    y.colwise() += b.v.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const Eigen::Index frames = dy.cols();
    const int pad = (kernel_ - 1) / 2;
    Mat<T> dx = Mat<T>::Zero(channels_, frames);
    for (int k = 0; k < kernel_; ++k) {
      const Eigen::Index shift = k - pad;
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index t1 = std::min<Eigen::Index>(frames, frames - shift);
      if (t0 >= t1) continue;
      w.g.col(k).array() +=
          (dy.middleCols(t0, t1 - t0).array() * x_.middleCols(t0 + shift, t1 - t0).array()).rowwise().sum();
      dx.middleCols(t0 + shift, t1 - t0).array() +=
          dy.middleCols(t0, t1 - t0).array().colwise() * w.v.col(k).array();
    }
    b.g.col(0) += dy.rowwise().sum();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".weight", w, out);
    collect_param(prefix + ".bias", b, out);
  }

  Param<T> w, b;

 private:
  int channels_, kernel_;
  Mat<T> x_;
};

// Layer normalization over the channel axis, one statistic per time step.
template <typename T>
class LayerNormChannels {
 public:
  explicit LayerNormChannels(int channels, T eps = static_cast<T>(1e-6)) : channels_(channels), eps_(eps) {
    gamma.resize(channels, 1);
    beta.resize(channels, 1);
    gamma.v.setOnes();
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != channels_) throw DimensionError("layer norm: channel mismatch");
    const Eigen::Index frames = x.cols();
    xhat_.resize(channels_, frames);
    inv_std_.resize(frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const T mu = x.col(t).mean();
      const T var = (x.col(t).array() - mu).square().mean();
      const T inv = T(1) / std::sqrt(var + eps_);
      inv_std_(t) = inv;
      xhat_.col(t) = (x.col(t).array() - mu) * inv;
    }
    Mat<T> y = xhat_.array().colwise() * gamma.v.col(0).array();
    y.colwise() += beta.v.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    gamma.g.col(0).array() += (dy.array() * xhat_.array()).rowwise().sum();
    beta.g.col(0) += dy.rowwise().sum();
    const Eigen::Index frames = dy.cols();
    Mat<T> dx(channels_, frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const auto dxh = (dy.col(t).array() * gamma.v.col(0).array()).eval();
      const T m1 = dxh.mean();
      const T m2 = (dxh * xhat_.col(t).array()).mean();
      dx.col(t) = inv_std_(t) * (dxh - m1 - xhat_.col(t).array() * m2);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".gamma", gamma, out);
    collect_param(prefix + ".beta", beta, out);
  }

  Param<T> gamma, beta;

 private:
  int channels_;
  T eps_;
  Mat<T> xhat_;
  Vec<T> inv_std_;
};

// Exact GELU, x * Phi(x).
template <typename T>
class Gelu {
 public:
  Mat<T> forward(const Mat<T>& x) {
    x_ = x;
    return x.unaryExpr([](T v) {
      return static_cast<T>(0.5 * v * (1.0 + std::erf(static_cast<double>(v) / std::sqrt(2.0))));
    });
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx = x_.unaryExpr([](T v) {
      const double x = static_cast<double>(v);
      const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
      const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
      return static_cast<T>(cdf + x * phi);
    });
    return dx.array() * dy.array();
  }

 private:
  Mat<T> x_;
};

template <typename T>
class LeakyRelu {
 public:
  explicit LeakyRelu(T slope) : slope_(slope) {}

  Mat<T> forward(const Mat<T>& x) {
    x_ = x;
    return x.unaryExpr([s = slope_](T v) { return v > T(0) ? v : s * v; });
  }

  Mat<T> backward(const Mat<T>& dy) {
    return dy.array() * x_.unaryExpr([s = slope_](T v) { return v > T(0) ? T(1) : s; }).array();
  }

 private:
  T slope_;
  Mat<T> x_;
};

// Global response normalization: channels are rescaled by their time-axis L2
// norm relative to the cross-channel mean norm. gamma/beta start at zero so
// the module is an identity at initialization.
template <typename T>
class Grn {
 public:
  explicit Grn(int channels, T eps = static_cast<T>(1e-6)) : channels_(channels), eps_(eps) {
    gamma.resize(channels, 1);
    beta.resize(channels, 1);
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != channels_) throw DimensionError("grn: channel mismatch");
    x_ = x;
    norms_ = x.rowwise().norm();
    mean_norm_ = norms_.mean();
    scale_ = norms_ / (mean_norm_ + eps_);
    Mat<T> xs = x.array().colwise() * scale_.array();
    Mat<T> y = xs.array().colwise() * gamma.v.col(0).array();
    y.colwise() += beta.v.col(0);
    return y + x;
  }

  Mat<T> backward(const Mat<T>& dy) {
    gamma.g.col(0).array() +=
        (dy.array() * (x_.array().colwise() * scale_.array())).rowwise().sum();
    beta.g.col(0) += dy.rowwise().sum();

    Mat<T> dx = dy;  // residual branch
    dx.array() += dy.array().colwise() * (gamma.v.col(0).array() * scale_.array());

    // Path through the per-channel scale factors.
    Vec<T> q = (dy.array() * x_.array()).rowwise().sum().matrix();
    q.array() *= gamma.v.col(0).array();  // q_c = dL/dscale_c
    const T denom = mean_norm_ + eps_;
    Vec<T> dnorm = q / denom;
    dnorm.array() -= q.dot(norms_) / (denom * denom * static_cast<T>(channels_));
    for (int c = 0; c < channels_; ++c) {
      const T n = std::max(norms_(c), static_cast<T>(1e-30));
      dx.row(c) += (dnorm(c) / n) * x_.row(c);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".gamma", gamma, out);
    collect_param(prefix + ".beta", beta, out);
  }

  Param<T> gamma, beta;

 private:
  int channels_;
  T eps_;
  Mat<T> x_;
  Vec<T> norms_, scale_;
  T mean_norm_ = T(0);
};

template <typename T>
class MeanPoolTime {
 public:
  Mat<T> forward(const Mat<T>& x) {
    if (x.cols() < 1) throw DimensionError("mean pool: empty time axis");
    frames_ = x.cols();
    return x.rowwise().mean();
  }

  Mat<T> backward(const Mat<T>& dy) {
    return (dy / static_cast<T>(frames_)).replicate(1, frames_);
  }

 private:
  Eigen::Index frames_ = 0;
};

// 2-D feature map stored as channels x (height*width), column index h*width+w.
template <typename T>
struct FeatureMap {
  int channels = 0, height = 0, width = 0;
  Mat<T> data;

  static FeatureMap from(Mat<T> plane) {
    FeatureMap f;
    f.channels = 1;
    f.height = static_cast<int>(plane.rows());
    f.width = static_cast<int>(plane.cols());
    f.data.resize(1, plane.size());
    for (int h = 0; h < f.height; ++h)
      for (int w = 0; w < f.width; ++w) f.data(0, h * f.width + w) = plane(h, w);
    return f;
  }
};

// Stride-1 2-D convolution via im2col. Patches are rebuilt in backward instead
// of being cached; only the input is retained.
template <typename T>
class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kh, int kw, int pad_h, int pad_w)
      : in_c_(in_channels), out_c_(out_channels), kh_(kh), kw_(kw), pad_h_(pad_h), pad_w_(pad_w) {
    w.resize(out_channels, in_channels * kh * kw);
    b.resize(out_channels, 1);
  }

  void init(Rng& rng, double stddev) {
    fill_gauss(w.v, rng, stddev);
    b.v.setZero();
  }

  static std::pair<int, int> out_shape(int h, int w, int kh, int kw, int pad_h, int pad_w) {
    return {h + 2 * pad_h - kh + 1, w + 2 * pad_w - kw + 1};
  }

  FeatureMap<T> forward(const FeatureMap<T>& x) {
    if (x.channels != in_c_) throw DimensionError("conv2d: channel mismatch");
    auto [oh, ow] = out_shape(x.height, x.width, kh_, kw_, pad_h_, pad_w_);
    if (oh < 1 || ow < 1) throw DimensionError("conv2d: input smaller than kernel");
    x_ = x;
    Mat<T> patches = im2col(x, oh, ow);
    FeatureMap<T> y;
    y.channels = out_c_;
    y.height = oh;
    y.width = ow;
    y.data = w.v * patches;
    y.data.colwise() += b.v.col(0);
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) {
    auto [oh, ow] = out_shape(x_.height, x_.width, kh_, kw_, pad_h_, pad_w_);
    Mat<T> patches = im2col(x_, oh, ow);
    w.g += dy.data * patches.transpose();
    b.g.col(0) += dy.data.rowwise().sum();

    Mat<T> dpatches = w.v.transpose() * dy.data;
    FeatureMap<T> dx;
    dx.channels = in_c_;
    dx.height = x_.height;
    dx.width = x_.width;
    dx.data = Mat<T>::Zero(in_c_, static_cast<Eigen::Index>(x_.height) * x_.width);
    for (int out_hw = 0; out_hw < oh * ow; ++out_hw) {
      const int out_h = out_hw / ow, out_w = out_hw % ow;
      for (int c = 0; c < in_c_; ++c)
        for (int dh = 0; dh < kh_; ++dh) {
          const int h = out_h - pad_h_ + dh;
          if (h < 0 || h >= x_.height) continue;
          for (int dw = 0; dw < kw_; ++dw) {
            const int wpos = out_w - pad_w_ + dw;
            if (wpos < 0 || wpos >= x_.width) continue;
            dx.data(c, h * x_.width + wpos) += dpatches((c * kh_ + dh) * kw_ + dw, out_hw);
          }
        }
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".weight", w, out);
    collect_param(prefix + ".bias", b, out);
  }

  Param<T> w, b;

 private:
  Mat<T> im2col(const FeatureMap<T>& x, int oh, int ow) const {
    Mat<T> patches = Mat<T>::Zero(static_cast<Eigen::Index>(in_c_) * kh_ * kw_,
                                  static_cast<Eigen::Index>(oh) * ow);
    for (int out_hw = 0; out_hw < oh * ow; ++out_hw) {
      const int out_h = out_hw / ow, out_w = out_hw % ow;
      for (int c = 0; c < in_c_; ++c)
        for (int dh = 0; dh < kh_; ++dh) {
          const int h = out_h - pad_h_ + dh;
          if (h < 0 || h >= x.height) continue;
          for (int dw = 0; dw < kw_; ++dw) {
            const int wpos = out_w - pad_w_ + dw;
            if (wpos < 0 || wpos >= x.width) continue;
            patches((c * kh_ + dh) * kw_ + dw, out_hw) = x.data(c, h * x.width + wpos);
          }
        }
    }
    return patches;
  }

  int in_c_, out_c_, kh_, kw_, pad_h_, pad_w_;
  FeatureMap<T> x_;
};

// Strided 1-D convolution with ceil-mode same padding: out = ceil(T/stride).
template <typename T>
class Conv1dStrided {
 public:
  Conv1dStrided(int in_channels, int out_channels, int kernel, int stride)
      : in_c_(in_channels), out_c_(out_channels), kernel_(kernel), stride_(stride) {
    w.resize(out_channels, in_channels * kernel);
    b.resize(out_channels, 1);
  }

  void init(Rng& rng, double stddev) {
    fill_gauss(w.v, rng, stddev);
    b.v.setZero();
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != in_c_) throw DimensionError("strided conv: channel mismatch");
    x_ = x;
    const Eigen::Index frames = x.cols();
    const Eigen::Index out_t = (frames + stride_ - 1) / stride_;
    const Eigen::Index total_pad = std::max<Eigen::Index>((out_t - 1) * stride_ + kernel_ - frames, 0);
    pad_left_ = total_pad / 2;
    Mat<T> patches = Mat<T>::Zero(static_cast<Eigen::Index>(in_c_) * kernel_, out_t);
    for (Eigen::Index t = 0; t < out_t; ++t)
      for (int k = 0; k < kernel_; ++k) {
        const Eigen::Index src = t * stride_ - pad_left_ + k;
        if (src < 0 || src >= frames) continue;
        patches.block(static_cast<Eigen::Index>(k) * in_c_, t, in_c_, 1) = x.col(src);
      }
    patches_cols_ = out_t;
    Mat<T> y = w_as_kernel_major() * patches;
    y.colwise() += b.v.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const Eigen::Index frames = x_.cols();
    const Eigen::Index out_t = patches_cols_;
    Mat<T> patches = Mat<T>::Zero(static_cast<Eigen::Index>(in_c_) * kernel_, out_t);
    for (Eigen::Index t = 0; t < out_t; ++t)
      for (int k = 0; k < kernel_; ++k) {
        const Eigen::Index src = t * stride_ - pad_left_ + k;
        if (src < 0 || src >= frames) continue;
        patches.block(static_cast<Eigen::Index>(k) * in_c_, t, in_c_, 1) = x_.col(src);
      }
    Mat<T> dw_km = dy * patches.transpose();
    accumulate_kernel_major(dw_km);
    b.g.col(0) += dy.rowwise().sum();

    Mat<T> dpatches = w_as_kernel_major().transpose() * dy;
    Mat<T> dx = Mat<T>::Zero(in_c_, frames);
    for (Eigen::Index t = 0; t < out_t; ++t)
      for (int k = 0; k < kernel_; ++k) {
        const Eigen::Index src = t * stride_ - pad_left_ + k;
        if (src < 0 || src >= frames) continue;
        dx.col(src) += dpatches.block(static_cast<Eigen::Index>(k) * in_c_, t, in_c_, 1);
      }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".weight", w, out);
    collect_param(prefix + ".bias", b, out);
  }

  Param<T> w, b;

 private:
  // Weight rows are out channels; columns grouped kernel-major to match the
  // patch layout built above (block k holds all input channels at tap k).
  Mat<T> w_as_kernel_major() const {
    Mat<T> km(out_c_, static_cast<Eigen::Index>(in_c_) * kernel_);
    for (int k = 0; k < kernel_; ++k)
      for (int c = 0; c < in_c_; ++c)
        km.col(static_cast<Eigen::Index>(k) * in_c_ + c) = w.v.col(static_cast<Eigen::Index>(c) * kernel_ + k);
    return km;
  }
  void accumulate_kernel_major(const Mat<T>& g_km) {
    for (int k = 0; k < kernel_; ++k)
      for (int c = 0; c < in_c_; ++c)
        w.g.col(static_cast<Eigen::Index>(c) * kernel_ + k) += g_km.col(static_cast<Eigen::Index>(k) * in_c_ + c);
  }

  int in_c_, out_c_, kernel_, stride_;
  Eigen::Index pad_left_ = 0, patches_cols_ = 0;
  Mat<T> x_;
};

// Transposed 1-D convolution producing exactly stride x upsampling
// (kernel = 2*stride, pad = stride/2; stride must be even, or 1-off kernels).
template <typename T>
class TransposedConv1d {
 public:
  TransposedConv1d(int in_channels, int out_channels, int kernel, int stride, int pad)
      : in_c_(in_channels), out_c_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
    if ((in_channels < 1) || (out_channels < 1)) throw ValueError("transposed conv: bad channels");
    w.resize(out_channels, static_cast<Eigen::Index>(in_channels) * kernel);
    b.resize(out_channels, 1);
  }

  void init(Rng& rng, double stddev) {
    fill_gauss(w.v, rng, stddev);
    b.v.setZero();
  }

  Eigen::Index out_frames(Eigen::Index in_frames) const {
    return (in_frames - 1) * stride_ + kernel_ - 2 * pad_;
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.rows() != in_c_) throw DimensionError("transposed conv: channel mismatch");
    x_ = x;
    const Eigen::Index frames = x.cols();
    const Eigen::Index out_t = out_frames(frames);
    Mat<T> y = Mat<T>::Zero(out_c_, out_t);
    for (int k = 0; k < kernel_; ++k) {
      const auto wk = w.v.middleCols(static_cast<Eigen::Index>(k) * in_c_, in_c_);
      for (Eigen::Index t = 0; t < frames; ++t) {
        const Eigen::Index pos = t * stride_ + k - pad_;
        if (pos < 0 || pos >= out_t) continue;
        y.col(pos) += wk * x.col(t);
      }
    }
    y.colwise() += b.v.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const Eigen::Index frames = x_.cols();
    const Eigen::Index out_t = dy.cols();
    Mat<T> dx = Mat<T>::Zero(in_c_, frames);
    for (int k = 0; k < kernel_; ++k) {
      const auto wk = w.v.middleCols(static_cast<Eigen::Index>(k) * in_c_, in_c_);
      auto dwk = w.g.middleCols(static_cast<Eigen::Index>(k) * in_c_, in_c_);
      for (Eigen::Index t = 0; t < frames; ++t) {
        const Eigen::Index pos = t * stride_ + k - pad_;
        if (pos < 0 || pos >= out_t) continue;
        dwk += dy.col(pos) * x_.col(t).transpose();
        dx.col(t) += wk.transpose() * dy.col(pos);
      }
    }
    b.g.col(0) += dy.rowwise().sum();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    collect_param(prefix + ".weight", w, out);
    collect_param(prefix + ".bias", b, out);
  }

  Param<T> w, b;

 private:
  int in_c_, out_c_, kernel_, stride_, pad_;
  Mat<T> x_;
};

}  // namespace reenc::nn
