// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "reenc/model/block.hpp"
#include "reenc/model/specs.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Latent predictor trunk: 1x1 input projection, a stack of residual blocks,
// 1x1 output projection. The raw output is (output_streams * C_out) x T; for
// stereo prediction rows [0, C_out) are the left stream and [C_out, 2*C_out)
// the right.
template <typename T>
class FTheta {
 public:
  explicit FTheta(ModelSpec spec)
      : spec_(std::move(spec)),
        in_proj_(spec_.latent_channels_in, spec_.hidden_dim),
        out_proj_(spec_.hidden_dim, spec_.output_streams * spec_.latent_channels_out) {
    spec_.validate();
    blocks_.reserve(spec_.num_blocks);
    for (int i = 0; i < spec_.num_blocks; ++i)
      blocks_.emplace_back(spec_.hidden_dim, spec_.expansion, spec_.dw_kernel, spec_.conditioned,
                           spec_.condition_dim);
  }

  void init(Rng& rng, double stddev = 0.02) {
    in_proj_.init(rng, stddev);
    for (auto& b : blocks_) b.init(rng, stddev);
    out_proj_.init(rng, stddev);
  }

  nn::Mat<T> forward(const nn::Mat<T>& z_in, const nn::Mat<T>* c) {
    if (z_in.rows() != spec_.latent_channels_in)
      throw DimensionError("predictor: expected " + std::to_string(spec_.latent_channels_in) +
                           " input channels, got " + std::to_string(z_in.rows()));
    if (!z_in.allFinite()) throw ValueError("predictor: non-finite input latent");
    if (spec_.conditioned) {
      if (!c) throw DimensionError("predictor: conditioned model requires a condition vector");
      if (c->rows() != spec_.condition_dim || c->cols() != 1)
        throw DimensionError("predictor: condition vector must be " + std::to_string(spec_.condition_dim) + "x1");
    } else if (c) {
      throw DimensionError("predictor: unconditioned model given a condition vector");
    }
    nn::Mat<T> h = in_proj_.forward(z_in);
    for (auto& b : blocks_) h = b.forward(h, c);
    return out_proj_.forward(h);
  }

  nn::Mat<T> backward(const nn::Mat<T>& dz_hat, nn::Mat<T>* dc) {
    nn::Mat<T> dh = out_proj_.backward(dz_hat);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) dh = it->backward(dh, dc);
    return in_proj_.backward(dh);
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    in_proj_.collect("f_theta.in_proj", out);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].collect("f_theta.block" + std::to_string(i), out);
    out_proj_.collect("f_theta.out_proj", out);
    return out;
  }

  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  nn::Pointwise<T> in_proj_;
  std::vector<ConvNextBlock<T>> blocks_;
  nn::Pointwise<T> out_proj_;
};

// Pipeline-facing wrappers keeping frame-rate metadata intact.
inline LatentSequence f_theta_predict_mono(FTheta<float>& model, const LatentSequence& z_in,
                                           const ConditionVector* cond) {
  nn::Mat<float> c;
  if (cond) c = cond->c;
  nn::Mat<float> y = model.forward(z_in.data(), cond ? &c : nullptr);
  if (model.spec().output_streams != 1) throw DimensionError("predictor: stereo model used on mono path");
  return LatentSequence(std::move(y), z_in.frame_rate_hz());
}

inline StackedLatent f_theta_predict_stereo(FTheta<float>& model, const LatentSequence& z_in,
                                            const ConditionVector& cond) {
  if (model.spec().output_streams != 2) throw DimensionError("predictor: mono model used on stereo path");
  nn::Mat<float> c = cond.c;
  nn::Mat<float> y = model.forward(z_in.data(), &c);
  const int ch = model.spec().latent_channels_out;
  return stack_streams(LatentSequence(y.topRows(ch), z_in.frame_rate_hz()),
                       LatentSequence(y.bottomRows(ch), z_in.frame_rate_hz()));
}

}  // namespace reenc
